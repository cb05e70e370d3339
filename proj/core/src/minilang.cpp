#include <algorithm>
#include <cctype>

#include "ast_internal.hpp"
#include "dgms/code_graph.hpp"

namespace dgms {

int AstTree::terminal_count() const {
    int n = 0;
    for (const auto& node : nodes)
        if (node.is_terminal()) ++n;
    return n;
}

void check_ast(const AstTree& tree) {
    const int n = tree.node_count();
    if (n == 0) throw ArgumentError("ast: empty tree");
    if (static_cast<int>(tree.children.size()) != n)
        throw ArgumentError("ast: child map size does not match node count");
    if (tree.root < 0 || tree.root >= n) throw ArgumentError("ast: root id out of range");

    std::vector<int> parent_count(static_cast<std::size_t>(n), 0);
    for (int p = 0; p < n; ++p) {
        const auto& kids = tree.children[static_cast<std::size_t>(p)];
        const auto& node = tree.nodes[static_cast<std::size_t>(p)];
        if (node.is_terminal() && !kids.empty())
            throw ArgumentError("ast: terminal node " + std::to_string(p) + " has children");
        if (!node.is_terminal() && kids.empty())
            throw ArgumentError("ast: non-terminal node " + std::to_string(p) + " has no children");
        if (node.is_identifier && !node.is_terminal())
            throw ArgumentError("ast: identifier flag on non-terminal node " + std::to_string(p));
        if (node.kind.empty())
            throw ArgumentError("ast: node " + std::to_string(p) + " has an empty kind");
        if (node.is_terminal() && node.value->empty())
            throw ArgumentError("ast: terminal node " + std::to_string(p) + " has an empty value");
        for (int c : kids) {
            if (c < 0 || c >= n) throw ArgumentError("ast: child id out of range");
            ++parent_count[static_cast<std::size_t>(c)];
        }
    }
    for (int i = 0; i < n; ++i) {
        int expected = (i == tree.root) ? 0 : 1;
        if (parent_count[static_cast<std::size_t>(i)] != expected)
            throw ArgumentError("ast: node " + std::to_string(i) + " has " +
                                std::to_string(parent_count[static_cast<std::size_t>(i)]) +
                                " parents (expected " + std::to_string(expected) + ")");
    }

    // DFS from the root: reachability plus the source_order bijection.
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<int> stack{tree.root};
    int terminal_rank = 0;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        if (seen[static_cast<std::size_t>(v)])
            throw ArgumentError("ast: cycle through node " + std::to_string(v));
        seen[static_cast<std::size_t>(v)] = 1;
        const auto& node = tree.nodes[static_cast<std::size_t>(v)];
        if (node.is_terminal()) {
            if (node.source_order != terminal_rank)
                throw ArgumentError("ast: source_order is not the left-to-right terminal order");
            ++terminal_rank;
        } else if (node.source_order != -1) {
            throw ArgumentError("ast: non-terminal node " + std::to_string(v) +
                                " carries a source_order");
        }
        const auto& kids = tree.children[static_cast<std::size_t>(v)];
        for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(*it);
    }
    for (int i = 0; i < n; ++i)
        if (!seen[static_cast<std::size_t>(i)])
            throw ArgumentError("ast: node " + std::to_string(i) + " unreachable from root");
}

AstTree canonicalize_ast(const AstTree& tree) {
    const int n = tree.node_count();
    if (n == 0) throw ArgumentError("ast: empty tree");
    std::vector<int> remap(static_cast<std::size_t>(n), -1);
    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(n));
    std::vector<int> stack{tree.root};
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        if (v < 0 || v >= n) throw ArgumentError("ast: child id out of range");
        if (remap[static_cast<std::size_t>(v)] != -1)
            throw ArgumentError("ast: cycle through node " + std::to_string(v));
        remap[static_cast<std::size_t>(v)] = static_cast<int>(order.size());
        order.push_back(v);
        const auto& kids = tree.children[static_cast<std::size_t>(v)];
        for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(*it);
    }
    if (static_cast<int>(order.size()) != n)
        throw ArgumentError("ast: nodes unreachable from root");
    AstTree out;
    out.root = 0;
    out.nodes.reserve(order.size());
    out.children.reserve(order.size());
    int terminal_rank = 0;
    for (int old_id : order) {
        AstNode node = tree.nodes[static_cast<std::size_t>(old_id)];
        node.source_order = node.is_terminal() ? terminal_rank++ : -1;
        out.nodes.push_back(std::move(node));
        std::vector<int> kids;
        for (int c : tree.children[static_cast<std::size_t>(old_id)])
            kids.push_back(remap[static_cast<std::size_t>(c)]);
        out.children.push_back(std::move(kids));
    }
    return out;
}

namespace {

enum class TokKind { Ident, Int, String, Keyword, Op, Punct, Eof };

struct Token {
    TokKind kind = TokKind::Eof;
    std::string text;
    int line = 1;
    int col = 1;
};

bool is_keyword(std::string_view s) {
    return s == "if" || s == "else" || s == "while" || s == "return";
}

std::vector<Token> lex(std::string_view src) {
    std::vector<Token> tokens;
    std::size_t pos = 0;
    int line = 1, col = 1;
    auto fail = [&](const std::string& message) -> void {
        throw ParseError(std::to_string(line) + ":" + std::to_string(col) + ": " + message);
    };
    auto peek = [&]() -> char { return pos < src.size() ? src[pos] : '\0'; };
    auto advance = [&]() -> char {
        char c = src[pos++];
        if (c == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
        return c;
    };
    while (pos < src.size()) {
        char c = peek();
        if (std::isspace(static_cast<unsigned char>(c))) {
            advance();
            continue;
        }
        Token tok;
        tok.line = line;
        tok.col = col;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::string text;
            while (pos < src.size() &&
                   (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_'))
                text.push_back(advance());
            tok.kind = is_keyword(text) ? TokKind::Keyword : TokKind::Ident;
            tok.text = std::move(text);
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            std::string text;
            while (pos < src.size() && std::isdigit(static_cast<unsigned char>(peek())))
                text.push_back(advance());
            tok.kind = TokKind::Int;
            tok.text = std::move(text);
        } else if (c == '"') {
            std::string text;
            text.push_back(advance());
            bool closed = false;
            while (pos < src.size()) {
                char d = advance();
                text.push_back(d);
                if (d == '\\' && pos < src.size()) {
                    text.push_back(advance());
                } else if (d == '"') {
                    closed = true;
                    break;
                }
            }
            if (!closed) fail("unterminated string literal");
            tok.kind = TokKind::String;
            tok.text = std::move(text);
        } else if (c == '=') {
            advance();
            tok.kind = TokKind::Op;
            if (peek() == '=') {
                advance();
                tok.text = "==";
            } else {
                tok.text = "=";
            }
        } else if (c == '+' || c == '-' || c == '*' || c == '/' || c == '<' || c == '>') {
            advance();
            tok.kind = TokKind::Op;
            tok.text = std::string(1, c);
        } else if (c == '{' || c == '}' || c == '(' || c == ')' || c == ',') {
            advance();
            tok.kind = TokKind::Punct;
            tok.text = std::string(1, c);
        } else {
            fail(std::string("unexpected character '") + c + "'");
        }
        tokens.push_back(std::move(tok));
    }
    Token eof;
    eof.line = line;
    eof.col = col;
    tokens.push_back(std::move(eof));
    return tokens;
}

class Parser {
public:
    explicit Parser(std::string_view src) : tokens_(lex(src)) {}

    AstTree parse() {
        int program = make_nonterminal("Program");
        while (!at(TokKind::Eof)) attach(program, parse_stmt());
        if (tree_.children[static_cast<std::size_t>(program)].empty())
            fail("expected at least one statement");
        tree_.root = program;
        AstTree out = canonicalize_ast(tree_);
        check_ast(out);
        return out;
    }

private:
    std::vector<Token> tokens_;
    std::size_t cursor_ = 0;
    AstTree tree_;

    const Token& cur() const { return tokens_[cursor_]; }
    bool at(TokKind k) const { return cur().kind == k; }
    bool at(TokKind k, std::string_view text) const {
        return cur().kind == k && cur().text == text;
    }
    const Token& lookahead() const {
        return tokens_[std::min(cursor_ + 1, tokens_.size() - 1)];
    }

    [[noreturn]] void fail(const std::string& message) const {
        throw ParseError(std::to_string(cur().line) + ":" + std::to_string(cur().col) + ": " +
                         message);
    }

    int make_nonterminal(std::string kind) {
        tree_.nodes.push_back(AstNode{std::move(kind), std::nullopt, false, -1});
        tree_.children.emplace_back();
        return tree_.node_count() - 1;
    }

    void attach(int parent, int child) {
        tree_.children[static_cast<std::size_t>(parent)].push_back(child);
    }

    int consume_terminal(std::string kind, bool is_identifier = false) {
        Token tok = cur();
        ++cursor_;
        tree_.nodes.push_back(AstNode{std::move(kind), std::move(tok.text), is_identifier, 0});
        tree_.children.emplace_back();
        return tree_.node_count() - 1;
    }

    int expect_op(std::string_view op) {
        if (!at(TokKind::Op, op)) fail("expected '" + std::string(op) + "'");
        return consume_terminal("Op");
    }

    int expect_punct(std::string_view p) {
        if (!at(TokKind::Punct, p)) fail("expected '" + std::string(p) + "'");
        return consume_terminal("Punct");
    }

    int expect_keyword(std::string_view kw) {
        if (!at(TokKind::Keyword, kw)) fail("expected '" + std::string(kw) + "'");
        return consume_terminal("Keyword");
    }

    bool starts_expr() const {
        return at(TokKind::Ident) || at(TokKind::Int) || at(TokKind::String) ||
               at(TokKind::Punct, "(");
    }

    int parse_stmt() {
        if (at(TokKind::Keyword, "if")) return parse_if();
        if (at(TokKind::Keyword, "while")) return parse_while();
        if (at(TokKind::Keyword, "return")) return parse_return();
        if (at(TokKind::Ident) && lookahead().kind == TokKind::Op && lookahead().text == "=")
            return parse_assign();
        if (starts_expr()) {
            int node = make_nonterminal("ExprStmt");
            attach(node, parse_expr());
            return node;
        }
        fail("expected a statement");
    }

    int parse_assign() {
        int node = make_nonterminal("Assign");
        attach(node, consume_terminal("Identifier", true));
        attach(node, expect_op("="));
        attach(node, parse_expr());
        return node;
    }

    int parse_if() {
        int node = make_nonterminal("If");
        attach(node, expect_keyword("if"));
        attach(node, parse_expr());
        attach(node, parse_block());
        if (at(TokKind::Keyword, "else")) {
            attach(node, expect_keyword("else"));
            attach(node, parse_block());
        }
        return node;
    }

    int parse_while() {
        int node = make_nonterminal("While");
        attach(node, expect_keyword("while"));
        attach(node, parse_expr());
        attach(node, parse_block());
        return node;
    }

    int parse_return() {
        int node = make_nonterminal("Return");
        attach(node, expect_keyword("return"));
        if (starts_expr()) attach(node, parse_expr());
        return node;
    }

    int parse_block() {
        int node = make_nonterminal("Block");
        attach(node, expect_punct("{"));
        while (!at(TokKind::Punct, "}")) {
            if (at(TokKind::Eof)) fail("expected '}'");
            attach(node, parse_stmt());
        }
        attach(node, expect_punct("}"));
        return node;
    }

    bool at_binary_op() const {
        if (!at(TokKind::Op)) return false;
        const std::string& t = cur().text;
        return t == "+" || t == "-" || t == "*" || t == "/" || t == "<" || t == ">" || t == "==";
    }

    // Left-associative; node ids are renumbered to pre-order afterwards.
    int parse_expr() {
        int lhs = parse_term();
        while (at_binary_op()) {
            int op = consume_terminal("Op");
            int rhs = parse_term();
            int node = make_nonterminal("BinaryExpr");
            attach(node, lhs);
            attach(node, op);
            attach(node, rhs);
            lhs = node;
        }
        return lhs;
    }

    int parse_term() {
        if (at(TokKind::Ident)) {
            if (lookahead().kind == TokKind::Punct && lookahead().text == "(") return parse_call();
            return consume_terminal("Identifier", true);
        }
        if (at(TokKind::Int)) return consume_terminal("IntLiteral");
        if (at(TokKind::String)) return consume_terminal("StringLiteral");
        if (at(TokKind::Punct, "(")) {
            int node = make_nonterminal("ParenExpr");
            attach(node, expect_punct("("));
            attach(node, parse_expr());
            attach(node, expect_punct(")"));
            return node;
        }
        fail("expected expression");
    }

    int parse_call() {
        int node = make_nonterminal("Call");
        attach(node, consume_terminal("Identifier", true));
        attach(node, expect_punct("("));
        if (!at(TokKind::Punct, ")")) {
            attach(node, parse_expr());
            while (at(TokKind::Punct, ",")) {
                attach(node, expect_punct(","));
                attach(node, parse_expr());
            }
        }
        attach(node, expect_punct(")"));
        return node;
    }
};

} // namespace

AstTree parse_minilang(std::string_view source) {
    Parser parser(source);
    return parser.parse();
}

} // namespace dgms
