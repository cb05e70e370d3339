#include "dgms/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dgms {

namespace {

template <class S>
std::string shape_str(const Matrix<S>& m) {
    return "(" + std::to_string(m.rows) + "," + std::to_string(m.cols) + ")";
}

} // namespace

template <class S>
void Tape<S>::check_owned(Tensor<S> t) const {
    if (t.tape_ != this || t.id_ < 0 || t.id_ >= static_cast<int>(nodes_.size()))
        throw ArgumentError("tensor does not belong to this tape");
}

template <class S>
const Matrix<S>& Tape<S>::value(Tensor<S> t) const {
    check_owned(t);
    return node(t.id_).value;
}

template <class S>
Matrix<S> Tape<S>::grad(Tensor<S> t) const {
    check_owned(t);
    const Node& n = node(t.id_);
    if (n.grad.data.empty()) return Matrix<S>(n.value.rows, n.value.cols);
    return n.grad;
}

template <class S>
Tensor<S> Tape<S>::leaf(Matrix<S> value, bool requires_grad) {
    Node n;
    n.op = Op::Leaf;
    n.value = std::move(value);
    n.needs_grad = requires_grad;
    return Tensor<S>(this, push(std::move(n)));
}

template <class S>
Tensor<S> Tape<S>::matmul(Tensor<S> a, Tensor<S> b) {
    check_owned(a);
    check_owned(b);
    const Matrix<S>& A = node(a.id_).value;
    const Matrix<S>& B = node(b.id_).value;
    if (A.cols != B.rows)
        throw ShapeError("matmul: inner dimensions differ " + shape_str(A) + " x " + shape_str(B));
    Node n;
    n.op = Op::MatMul;
    n.a = a.id_;
    n.b = b.id_;
    n.needs_grad = node(a.id_).needs_grad || node(b.id_).needs_grad;
    n.value = Matrix<S>(A.rows, B.cols);
    for (int i = 0; i < A.rows; ++i)
        for (int k = 0; k < A.cols; ++k) {
            const S aik = A.at(i, k);
            if (aik == S(0)) continue;
            const S* brow = B.data.data() + static_cast<std::size_t>(k) * B.cols;
            S* crow = n.value.data.data() + static_cast<std::size_t>(i) * B.cols;
            for (int j = 0; j < B.cols; ++j) crow[j] += aik * brow[j];
        }
    return Tensor<S>(this, push(std::move(n)));
}

template <class S>
Tensor<S> Tape<S>::add(Tensor<S> a, Tensor<S> b) {
    check_owned(a);
    check_owned(b);
    const Matrix<S>& A = node(a.id_).value;
    const Matrix<S>& B = node(b.id_).value;
    if (!A.same_shape(B))
        throw ShapeError("add: shapes differ " + shape_str(A) + " vs " + shape_str(B));
    Node n;
    n.op = Op::Add;
    n.a = a.id_;
    n.b = b.id_;
    n.needs_grad = node(a.id_).needs_grad || node(b.id_).needs_grad;
    n.value = A;
    for (std::size_t i = 0; i < n.value.data.size(); ++i) n.value.data[i] += B.data[i];
    return Tensor<S>(this, push(std::move(n)));
}

template <class S>
Tensor<S> Tape<S>::sub(Tensor<S> a, Tensor<S> b) {
    check_owned(a);
    check_owned(b);
    const Matrix<S>& A = node(a.id_).value;
    const Matrix<S>& B = node(b.id_).value;
    if (!A.same_shape(B))
        throw ShapeError("sub: shapes differ " + shape_str(A) + " vs " + shape_str(B));
    Node n;
    n.op = Op::Sub;
    n.a = a.id_;
    n.b = b.id_;
    n.needs_grad = node(a.id_).needs_grad || node(b.id_).needs_grad;
    n.value = A;
    for (std::size_t i = 0; i < n.value.data.size(); ++i) n.value.data[i] -= B.data[i];
    return Tensor<S>(this, push(std::move(n)));
}

template <class S>
Tensor<S> Tape<S>::mul(Tensor<S> a, Tensor<S> b) {
    check_owned(a);
    check_owned(b);
    const Matrix<S>& A = node(a.id_).value;
    const Matrix<S>& B = node(b.id_).value;
    if (!A.same_shape(B))
        throw ShapeError("mul: shapes differ " + shape_str(A) + " vs " + shape_str(B));
    Node n;
    n.op = Op::Mul;
    n.a = a.id_;
    n.b = b.id_;
    n.needs_grad = node(a.id_).needs_grad || node(b.id_).needs_grad;
    n.value = A;
    for (std::size_t i = 0; i < n.value.data.size(); ++i) n.value.data[i] *= B.data[i];
    return Tensor<S>(this, push(std::move(n)));
}

template <class S>
Tensor<S> Tape<S>::scale(Tensor<S> a, S k) {
    check_owned(a);
    Node n;
    n.op = Op::Scale;
    n.a = a.id_;
    n.needs_grad = node(a.id_).needs_grad;
    n.scale_factor = k;
    n.value = node(a.id_).value;
    for (auto& v : n.value.data) v *= k;
    return Tensor<S>(this, push(std::move(n)));
}

template <class S>
Tensor<S> Tape<S>::add_row_bias(Tensor<S> x, Tensor<S> bias) {
    check_owned(x);
    check_owned(bias);
    const Matrix<S>& X = node(x.id_).value;
    const Matrix<S>& B = node(bias.id_).value;
    if (B.rows != 1 || B.cols != X.cols)
        throw ShapeError("add_row_bias: bias must be (1," + std::to_string(X.cols) + "), got " +
                         shape_str(B));
    Node n;
    n.op = Op::AddRowBias;
    n.a = x.id_;
    n.b = bias.id_;
    n.needs_grad = node(x.id_).needs_grad || node(bias.id_).needs_grad;
    n.value = X;
    for (int i = 0; i < X.rows; ++i)
        for (int j = 0; j < X.cols; ++j) n.value.at(i, j) += B.at(0, j);
    return Tensor<S>(this, push(std::move(n)));
}

template <class S>
Tensor<S> Tape<S>::relu(Tensor<S> a) {
    check_owned(a);
    const Matrix<S>& A = node(a.id_).value;
    Node n;
    n.op = Op::Relu;
    n.a = a.id_;
    n.needs_grad = node(a.id_).needs_grad;
    n.value = A;
    for (auto& v : n.value.data) {
        note_margin(std::abs(v));
        if (v < S(0)) v = S(0);
    }
    return Tensor<S>(this, push(std::move(n)));
}

template <class S>
Tensor<S> Tape<S>::hinge(Tensor<S> x) {
    check_owned(x);
    const Matrix<S>& X = node(x.id_).value;
    if (X.rows != 1 || X.cols != 1) throw ShapeError("hinge: input must be scalar");
    Node n;
    n.op = Op::Hinge;
    n.a = x.id_;
    n.needs_grad = node(x.id_).needs_grad;
    n.value = X;
    note_margin(std::abs(n.value.data[0]));
    if (n.value.data[0] < S(0)) n.value.data[0] = S(0);
    return Tensor<S>(this, push(std::move(n)));
}

template <class S>
Tensor<S> Tape<S>::concat_cols(Tensor<S> a, Tensor<S> b) {
    check_owned(a);
    check_owned(b);
    const Matrix<S>& A = node(a.id_).value;
    const Matrix<S>& B = node(b.id_).value;
    if (A.rows != B.rows)
        throw ShapeError("concat_cols: row counts differ " + shape_str(A) + " vs " + shape_str(B));
    Node n;
    n.op = Op::ConcatCols;
    n.a = a.id_;
    n.b = b.id_;
    n.needs_grad = node(a.id_).needs_grad || node(b.id_).needs_grad;
    n.value = Matrix<S>(A.rows, A.cols + B.cols);
    for (int i = 0; i < A.rows; ++i) {
        for (int j = 0; j < A.cols; ++j) n.value.at(i, j) = A.at(i, j);
        for (int j = 0; j < B.cols; ++j) n.value.at(i, A.cols + j) = B.at(i, j);
    }
    return Tensor<S>(this, push(std::move(n)));
}

template <class S>
Tensor<S> Tape<S>::col_max(Tensor<S> a) {
    check_owned(a);
    const Matrix<S>& A = node(a.id_).value;
    if (A.rows < 1) throw ShapeError("col_max: input must have at least one row");
    Node n;
    n.op = Op::ColMax;
    n.a = a.id_;
    n.needs_grad = node(a.id_).needs_grad;
    n.value = Matrix<S>(1, A.cols);
    n.argmax.assign(static_cast<std::size_t>(A.cols), 0);
    for (int j = 0; j < A.cols; ++j) {
        S best = A.at(0, j);
        int best_row = 0;
        S second = -std::numeric_limits<S>::infinity();
        for (int i = 1; i < A.rows; ++i) {
            const S v = A.at(i, j);
            if (v > best) {
                second = best;
                best = v;
                best_row = i;
            } else if (v > second) {
                second = v;
            }
        }
        if (A.rows > 1) note_margin(best - second);
        n.value.at(0, j) = best;
        n.argmax[static_cast<std::size_t>(j)] = best_row;
    }
    return Tensor<S>(this, push(std::move(n)));
}

template <class S>
Tensor<S> Tape<S>::col_mean(Tensor<S> a) {
    check_owned(a);
    const Matrix<S>& A = node(a.id_).value;
    if (A.rows < 1) throw ShapeError("col_mean: input must have at least one row");
    Node n;
    n.op = Op::ColMean;
    n.a = a.id_;
    n.needs_grad = node(a.id_).needs_grad;
    n.value = Matrix<S>(1, A.cols);
    const S inv = S(1) / static_cast<S>(A.rows);
    for (int j = 0; j < A.cols; ++j) {
        S acc = S(0);
        for (int i = 0; i < A.rows; ++i) acc += A.at(i, j);
        n.value.at(0, j) = acc * inv;
    }
    return Tensor<S>(this, push(std::move(n)));
}

template <class S>
Tensor<S> Tape<S>::sum_all(Tensor<S> a) {
    check_owned(a);
    const Matrix<S>& A = node(a.id_).value;
    Node n;
    n.op = Op::SumAll;
    n.a = a.id_;
    n.needs_grad = node(a.id_).needs_grad;
    n.value = Matrix<S>(1, 1);
    S acc = S(0);
    for (const auto& v : A.data) acc += v;
    n.value.data[0] = acc;
    return Tensor<S>(this, push(std::move(n)));
}

template <class S>
Tensor<S> Tape<S>::transpose(Tensor<S> a) {
    check_owned(a);
    const Matrix<S>& A = node(a.id_).value;
    Node n;
    n.op = Op::Transpose;
    n.a = a.id_;
    n.needs_grad = node(a.id_).needs_grad;
    n.value = Matrix<S>(A.cols, A.rows);
    for (int i = 0; i < A.rows; ++i)
        for (int j = 0; j < A.cols; ++j) n.value.at(j, i) = A.at(i, j);
    return Tensor<S>(this, push(std::move(n)));
}

template <class S>
Tensor<S> Tape<S>::cosine(Tensor<S> u, Tensor<S> v) {
    check_owned(u);
    check_owned(v);
    const Matrix<S>& U = node(u.id_).value;
    const Matrix<S>& V = node(v.id_).value;
    if (U.rows != 1 || V.rows != 1) throw ShapeError("cosine: inputs must be row vectors");
    if (U.cols != V.cols)
        throw ShapeError("cosine: lengths differ " + shape_str(U) + " vs " + shape_str(V));
    Node n;
    n.op = Op::Cosine;
    n.a = u.id_;
    n.b = v.id_;
    n.needs_grad = node(u.id_).needs_grad || node(v.id_).needs_grad;
    n.value = Matrix<S>(1, 1);
    S uu = S(0), vv = S(0), uv = S(0);
    for (int j = 0; j < U.cols; ++j) {
        uu += U.data[static_cast<std::size_t>(j)] * U.data[static_cast<std::size_t>(j)];
        vv += V.data[static_cast<std::size_t>(j)] * V.data[static_cast<std::size_t>(j)];
        uv += U.data[static_cast<std::size_t>(j)] * V.data[static_cast<std::size_t>(j)];
    }
    const S nu = std::sqrt(uu);
    const S nv = std::sqrt(vv);
    note_margin(std::min(nu, nv));
    if (nu < S(kCosineNormEpsilon) || nv < S(kCosineNormEpsilon)) {
        n.dead = true;
        n.value.data[0] = S(0);
    } else {
        n.value.data[0] = uv / (nu * nv);
    }
    return Tensor<S>(this, push(std::move(n)));
}

template <class S>
Tensor<S> Tape<S>::cross_cosine(Tensor<S> q, Tensor<S> e) {
    check_owned(q);
    check_owned(e);
    const Matrix<S>& Q = node(q.id_).value;
    const Matrix<S>& E = node(e.id_).value;
    if (Q.cols != E.cols)
        throw ShapeError("cross_cosine: feature dims differ " + shape_str(Q) + " vs " +
                         shape_str(E));
    Node n;
    n.op = Op::CrossCosine;
    n.a = q.id_;
    n.b = e.id_;
    n.needs_grad = node(q.id_).needs_grad || node(e.id_).needs_grad;
    n.value = Matrix<S>(Q.rows, E.rows);
    std::vector<S> qn(static_cast<std::size_t>(Q.rows)), en(static_cast<std::size_t>(E.rows));
    for (int i = 0; i < Q.rows; ++i) {
        S acc = S(0);
        for (int k = 0; k < Q.cols; ++k) acc += Q.at(i, k) * Q.at(i, k);
        qn[static_cast<std::size_t>(i)] = std::sqrt(acc);
        note_margin(qn[static_cast<std::size_t>(i)]);
    }
    for (int j = 0; j < E.rows; ++j) {
        S acc = S(0);
        for (int k = 0; k < E.cols; ++k) acc += E.at(j, k) * E.at(j, k);
        en[static_cast<std::size_t>(j)] = std::sqrt(acc);
        note_margin(en[static_cast<std::size_t>(j)]);
    }
    for (int i = 0; i < Q.rows; ++i)
        for (int j = 0; j < E.rows; ++j) {
            const S nu = qn[static_cast<std::size_t>(i)];
            const S nv = en[static_cast<std::size_t>(j)];
            if (nu < S(kCosineNormEpsilon) || nv < S(kCosineNormEpsilon)) continue;
            S dot = S(0);
            for (int k = 0; k < Q.cols; ++k) dot += Q.at(i, k) * E.at(j, k);
            n.value.at(i, j) = dot / (nu * nv);
        }
    return Tensor<S>(this, push(std::move(n)));
}

template <class S>
Tensor<S> Tape<S>::neighbor_mean(Tensor<S> x, std::shared_ptr<const GatherPlan> plan) {
    check_owned(x);
    if (!plan) throw ArgumentError("neighbor_mean: null plan");
    const Matrix<S>& X = node(x.id_).value;
    for (const auto& sources : plan->sources)
        for (int s : sources)
            if (s < 0 || s >= X.rows)
                throw ArgumentError("neighbor_mean: plan row index out of range");
    Node n;
    n.op = Op::NeighborMean;
    n.a = x.id_;
    n.needs_grad = node(x.id_).needs_grad;
    n.plan = plan;
    n.value = Matrix<S>(static_cast<int>(plan->sources.size()), X.cols);
    for (std::size_t i = 0; i < plan->sources.size(); ++i) {
        const auto& sources = plan->sources[i];
        if (sources.empty()) continue;
        S* out = n.value.data.data() + i * static_cast<std::size_t>(X.cols);
        for (int s : sources) {
            const S* row = X.data.data() + static_cast<std::size_t>(s) * X.cols;
            for (int j = 0; j < X.cols; ++j) out[j] += row[j];
        }
        const S inv = S(1) / static_cast<S>(sources.size());
        for (int j = 0; j < X.cols; ++j) out[j] *= inv;
    }
    return Tensor<S>(this, push(std::move(n)));
}

template <class S>
void Tape<S>::backward(Tensor<S> loss) {
    check_owned(loss);
    if (backward_done_) throw StateError("backward already ran on this tape");
    backward_done_ = true;
    const Node& top = node(loss.id_);
    if (top.value.rows != 1 || top.value.cols != 1)
        throw ShapeError("backward: loss must be a scalar, got " + shape_str(top.value));

    for (int id = 0; id <= loss.id_; ++id) {
        Node& n = node(id);
        if (n.needs_grad) n.grad = Matrix<S>(n.value.rows, n.value.cols);
    }
    if (!node(loss.id_).needs_grad) return; // no parameters anywhere below
    node(loss.id_).grad.data[0] = S(1);

    for (int id = loss.id_; id >= 0; --id) {
        if (node(id).needs_grad && node(id).op != Op::Leaf) backward_node(id);
    }
}

template <class S>
void Tape<S>::backward_node(int id) {
    Node& n = node(id);
    const Matrix<S>& g = n.grad;
    auto wants = [&](int pid) { return pid >= 0 && node(pid).needs_grad; };

    switch (n.op) {
    case Op::Leaf:
        break;
    case Op::MatMul: {
        const Matrix<S>& A = node(n.a).value;
        const Matrix<S>& B = node(n.b).value;
        if (wants(n.a)) {
            Matrix<S>& da = node(n.a).grad;
            // dA += g * B^T: rows of g dotted with rows of B
            for (int i = 0; i < A.rows; ++i) {
                const S* grow = g.data.data() + static_cast<std::size_t>(i) * g.cols;
                for (int k = 0; k < A.cols; ++k) {
                    const S* brow = B.data.data() + static_cast<std::size_t>(k) * B.cols;
                    S acc = S(0);
                    for (int j = 0; j < B.cols; ++j) acc += grow[j] * brow[j];
                    da.at(i, k) += acc;
                }
            }
        }
        if (wants(n.b)) {
            Matrix<S>& db = node(n.b).grad;
            // dB += A^T * g
            for (int k = 0; k < A.cols; ++k)
                for (int i = 0; i < A.rows; ++i) {
                    const S aik = A.at(i, k);
                    if (aik == S(0)) continue;
                    const S* grow = g.data.data() + static_cast<std::size_t>(i) * g.cols;
                    S* drow = db.data.data() + static_cast<std::size_t>(k) * db.cols;
                    for (int j = 0; j < B.cols; ++j) drow[j] += aik * grow[j];
                }
        }
        break;
    }
    case Op::Add: {
        if (wants(n.a)) {
            Matrix<S>& da = node(n.a).grad;
            for (std::size_t i = 0; i < g.data.size(); ++i) da.data[i] += g.data[i];
        }
        if (wants(n.b)) {
            Matrix<S>& db = node(n.b).grad;
            for (std::size_t i = 0; i < g.data.size(); ++i) db.data[i] += g.data[i];
        }
        break;
    }
    case Op::Sub: {
        if (wants(n.a)) {
            Matrix<S>& da = node(n.a).grad;
            for (std::size_t i = 0; i < g.data.size(); ++i) da.data[i] += g.data[i];
        }
        if (wants(n.b)) {
            Matrix<S>& db = node(n.b).grad;
            for (std::size_t i = 0; i < g.data.size(); ++i) db.data[i] -= g.data[i];
        }
        break;
    }
    case Op::Mul: {
        const Matrix<S>& A = node(n.a).value;
        const Matrix<S>& B = node(n.b).value;
        if (wants(n.a)) {
            Matrix<S>& da = node(n.a).grad;
            for (std::size_t i = 0; i < g.data.size(); ++i) da.data[i] += g.data[i] * B.data[i];
        }
        if (wants(n.b)) {
            Matrix<S>& db = node(n.b).grad;
            for (std::size_t i = 0; i < g.data.size(); ++i) db.data[i] += g.data[i] * A.data[i];
        }
        break;
    }
    case Op::Scale: {
        if (wants(n.a)) {
            Matrix<S>& da = node(n.a).grad;
            for (std::size_t i = 0; i < g.data.size(); ++i)
                da.data[i] += g.data[i] * n.scale_factor;
        }
        break;
    }
    case Op::AddRowBias: {
        if (wants(n.a)) {
            Matrix<S>& da = node(n.a).grad;
            for (std::size_t i = 0; i < g.data.size(); ++i) da.data[i] += g.data[i];
        }
        if (wants(n.b)) {
            Matrix<S>& db = node(n.b).grad;
            for (int i = 0; i < g.rows; ++i)
                for (int j = 0; j < g.cols; ++j) db.at(0, j) += g.at(i, j);
        }
        break;
    }
    case Op::Relu:
    case Op::Hinge: {
        if (wants(n.a)) {
            const Matrix<S>& A = node(n.a).value;
            Matrix<S>& da = node(n.a).grad;
            // Subgradient at 0 is 0, so only strictly positive inputs pass.
            for (std::size_t i = 0; i < g.data.size(); ++i)
                if (A.data[i] > S(0)) da.data[i] += g.data[i];
        }
        break;
    }
    case Op::ConcatCols: {
        const Matrix<S>& A = node(n.a).value;
        const Matrix<S>& B = node(n.b).value;
        if (wants(n.a)) {
            Matrix<S>& da = node(n.a).grad;
            for (int i = 0; i < A.rows; ++i)
                for (int j = 0; j < A.cols; ++j) da.at(i, j) += g.at(i, j);
        }
        if (wants(n.b)) {
            Matrix<S>& db = node(n.b).grad;
            for (int i = 0; i < B.rows; ++i)
                for (int j = 0; j < B.cols; ++j) db.at(i, j) += g.at(i, A.cols + j);
        }
        break;
    }
    case Op::ColMax: {
        if (wants(n.a)) {
            Matrix<S>& da = node(n.a).grad;
            for (int j = 0; j < g.cols; ++j)
                da.at(n.argmax[static_cast<std::size_t>(j)], j) += g.at(0, j);
        }
        break;
    }
    case Op::ColMean: {
        if (wants(n.a)) {
            const Matrix<S>& A = node(n.a).value;
            Matrix<S>& da = node(n.a).grad;
            const S inv = S(1) / static_cast<S>(A.rows);
            for (int i = 0; i < A.rows; ++i)
                for (int j = 0; j < A.cols; ++j) da.at(i, j) += g.at(0, j) * inv;
        }
        break;
    }
    case Op::SumAll: {
        if (wants(n.a)) {
            Matrix<S>& da = node(n.a).grad;
            const S gv = g.data[0];
            for (auto& v : da.data) v += gv;
        }
        break;
    }
    case Op::Transpose: {
        if (wants(n.a)) {
            Matrix<S>& da = node(n.a).grad;
            for (int i = 0; i < g.rows; ++i)
                for (int j = 0; j < g.cols; ++j) da.at(j, i) += g.at(i, j);
        }
        break;
    }
    case Op::Cosine: {
        if (n.dead) break;
        const Matrix<S>& U = node(n.a).value;
        const Matrix<S>& V = node(n.b).value;
        S uu = S(0), vv = S(0);
        for (const auto& x : U.data) uu += x * x;
        for (const auto& x : V.data) vv += x * x;
        const S nu = std::sqrt(uu);
        const S nv = std::sqrt(vv);
        const S c = n.value.data[0];
        const S gv = g.data[0];
        if (wants(n.a)) {
            Matrix<S>& da = node(n.a).grad;
            for (std::size_t k = 0; k < U.data.size(); ++k)
                da.data[k] += gv * (V.data[k] / (nu * nv) - c * U.data[k] / uu);
        }
        if (wants(n.b)) {
            Matrix<S>& db = node(n.b).grad;
            for (std::size_t k = 0; k < V.data.size(); ++k)
                db.data[k] += gv * (U.data[k] / (nu * nv) - c * V.data[k] / vv);
        }
        break;
    }
    case Op::CrossCosine: {
        const Matrix<S>& Q = node(n.a).value;
        const Matrix<S>& E = node(n.b).value;
        const int d = Q.cols;
        std::vector<S> qn(static_cast<std::size_t>(Q.rows)), en(static_cast<std::size_t>(E.rows));
        for (int i = 0; i < Q.rows; ++i) {
            S acc = S(0);
            for (int k = 0; k < d; ++k) acc += Q.at(i, k) * Q.at(i, k);
            qn[static_cast<std::size_t>(i)] = std::sqrt(acc);
        }
        for (int j = 0; j < E.rows; ++j) {
            S acc = S(0);
            for (int k = 0; k < d; ++k) acc += E.at(j, k) * E.at(j, k);
            en[static_cast<std::size_t>(j)] = std::sqrt(acc);
        }
        const bool wa = wants(n.a);
        const bool wb = wants(n.b);
        Matrix<S>* da = wa ? &node(n.a).grad : nullptr;
        Matrix<S>* db = wb ? &node(n.b).grad : nullptr;
        for (int i = 0; i < Q.rows; ++i) {
            const S nu = qn[static_cast<std::size_t>(i)];
            if (nu < S(kCosineNormEpsilon)) continue;
            for (int j = 0; j < E.rows; ++j) {
                const S nv = en[static_cast<std::size_t>(j)];
                if (nv < S(kCosineNormEpsilon)) continue;
                const S gij = g.at(i, j);
                if (gij == S(0)) continue;
                const S c = n.value.at(i, j);
                const S inv = S(1) / (nu * nv);
                if (wa)
                    for (int k = 0; k < d; ++k)
                        da->at(i, k) += gij * (E.at(j, k) * inv - c * Q.at(i, k) / (nu * nu));
                if (wb)
                    for (int k = 0; k < d; ++k)
                        db->at(j, k) += gij * (Q.at(i, k) * inv - c * E.at(j, k) / (nv * nv));
            }
        }
        break;
    }
    case Op::NeighborMean: {
        if (wants(n.a)) {
            Matrix<S>& da = node(n.a).grad;
            const auto& sources = n.plan->sources;
            for (std::size_t i = 0; i < sources.size(); ++i) {
                if (sources[i].empty()) continue;
                const S inv = S(1) / static_cast<S>(sources[i].size());
                const S* grow = g.data.data() + i * static_cast<std::size_t>(g.cols);
                for (int s : sources[i]) {
                    S* drow = da.data.data() + static_cast<std::size_t>(s) * g.cols;
                    for (int j = 0; j < g.cols; ++j) drow[j] += grow[j] * inv;
                }
            }
        }
        break;
    }
    }
}

template class Tape<float>;
template class Tape<double>;

} // namespace dgms
