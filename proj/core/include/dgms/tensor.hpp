#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include "dgms/matrix.hpp"

namespace dgms {

template <class S>
class Tape;

/// Lightweight handle to a value recorded on a Tape.
template <class S>
class Tensor {
public:
    Tensor() = default;

    bool valid() const { return tape_ != nullptr; }
    int rows() const;
    int cols() const;
    bool is_scalar() const { return rows() == 1 && cols() == 1; }
    const Matrix<S>& value() const;
    S scalar_value() const;

private:
    friend class Tape<S>;
    Tensor(Tape<S>* tape, int id) : tape_(tape), id_(id) {}

    Tape<S>* tape_ = nullptr;
    int id_ = -1;
};

/// Row-gather plan for relation-wise neighbor averaging: sources[i] holds the
/// rows averaged into output row i (empty lists produce a zero row).
struct GatherPlan {
    std::vector<std::vector<int>> sources;

    int edge_total() const {
        int n = 0;
        for (const auto& s : sources) n += static_cast<int>(s.size());
        return n;
    }
};

/// Reverse-mode differentiation tape over dense 2-D tensors. One tape per
/// forward pass; independent tapes may run on different threads. Gradients
/// accumulate additively across fan-out; the sweep order is fixed, so a given
/// tape always produces bit-identical gradients.
template <class S>
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Tensor<S> leaf(Matrix<S> value, bool requires_grad = false);
    Tensor<S> scalar(S value) { return leaf(Matrix<S>::full(1, 1, value)); }

    Tensor<S> matmul(Tensor<S> a, Tensor<S> b);
    Tensor<S> add(Tensor<S> a, Tensor<S> b);
    Tensor<S> sub(Tensor<S> a, Tensor<S> b);
    Tensor<S> mul(Tensor<S> a, Tensor<S> b); // elementwise
    Tensor<S> scale(Tensor<S> a, S k);
    Tensor<S> add_row_bias(Tensor<S> x, Tensor<S> bias); // bias is (1, n)
    Tensor<S> relu(Tensor<S> a);
    Tensor<S> hinge(Tensor<S> x); // max(0, x) on a scalar
    Tensor<S> concat_cols(Tensor<S> a, Tensor<S> b);
    Tensor<S> col_max(Tensor<S> a);  // (m,n) -> (1,n); ties route grad to the lowest row
    Tensor<S> col_mean(Tensor<S> a); // (m,n) -> (1,n)
    Tensor<S> sum_all(Tensor<S> a);  // (m,n) -> (1,1)
    Tensor<S> transpose(Tensor<S> a);
    Tensor<S> cosine(Tensor<S> u, Tensor<S> v); // (1,n) x (1,n) -> (1,1)
    // Pairwise row cosines: (m,d) x (n,d) -> (m,n).
    Tensor<S> cross_cosine(Tensor<S> q, Tensor<S> e);
    // Relation-wise in-neighbor mean; the plan must describe rows of x.
    Tensor<S> neighbor_mean(Tensor<S> x, std::shared_ptr<const GatherPlan> plan);

    /// Reverse sweep from a scalar loss. One backward per tape.
    void backward(Tensor<S> loss);

    const Matrix<S>& value(Tensor<S> t) const;
    /// Gradient of the last backward's loss w.r.t. t (zeros if none flowed).
    Matrix<S> grad(Tensor<S> t) const;

    /// Smallest distance observed to a non-differentiable boundary (ReLU and
    /// hinge inputs near 0, near-tied column maxima, near-zero cosine norms).
    /// Infinity when no such op ran.
    S kink_margin() const { return kink_margin_; }

    int size() const { return static_cast<int>(nodes_.size()); }

private:
    enum class Op : std::uint8_t {
        Leaf,
        MatMul,
        Add,
        Sub,
        Mul,
        Scale,
        AddRowBias,
        Relu,
        Hinge,
        ConcatCols,
        ColMax,
        ColMean,
        SumAll,
        Transpose,
        Cosine,
        CrossCosine,
        NeighborMean,
    };

    struct Node {
        Op op = Op::Leaf;
        int a = -1;
        int b = -1;
        Matrix<S> value;
        Matrix<S> grad;
        bool needs_grad = false;
        bool dead = false; // cosine with a near-zero norm: zero gradient
        S scale_factor = S(0);
        std::vector<int> argmax; // ColMax winner row per column
        std::shared_ptr<const GatherPlan> plan;
    };

    // Deque keeps node addresses stable while ops keep recording, so value()
    // references stay valid for the life of the tape.
    std::deque<Node> nodes_;
    bool backward_done_ = false;
    S kink_margin_ = std::numeric_limits<S>::infinity();

    Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
    const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }

    int push(Node&& n) {
        nodes_.push_back(std::move(n));
        return static_cast<int>(nodes_.size()) - 1;
    }

    void check_owned(Tensor<S> t) const;
    void note_margin(S distance) {
        if (distance < kink_margin_) kink_margin_ = distance;
    }

    void backward_node(int id);
};

// Near-zero vector norms make cosine undefined; below this it scores 0 with
// zero gradient.
inline constexpr double kCosineNormEpsilon = 1e-12;

template <class S>
inline const Matrix<S>& Tensor<S>::value() const {
    if (!tape_) throw ArgumentError("tensor is not bound to a tape");
    return tape_->value(*this);
}

template <class S>
inline int Tensor<S>::rows() const {
    return value().rows;
}

template <class S>
inline int Tensor<S>::cols() const {
    return value().cols;
}

template <class S>
inline S Tensor<S>::scalar_value() const {
    const Matrix<S>& v = value();
    if (v.rows != 1 || v.cols != 1) throw ShapeError("scalar_value: tensor is not 1x1");
    return v.data[0];
}

struct GradCheckReport {
    double max_rel_err = 0.0;
    // True when some input sat within 10h of a kink (ReLU/hinge zero, max tie,
    // vanishing cosine norm); callers should resample rather than trust the
    // comparison there.
    bool near_kink = false;
};

/// Central-difference check of the tape gradients. `f` must rebuild the same
/// scalar loss from the given leaves on the given tape; it is invoked once for
/// the analytic pass and twice per parameter coordinate for the numeric one.
/// Relative error uses |a - n| / max(1e-8, |a| + |n|).
template <class F>
GradCheckReport grad_check(F&& f, const std::vector<Matrix<double>>& params, double h = 1e-5) {
    GradCheckReport report;

    Tape<double> tape;
    std::vector<Tensor<double>> leaves;
    leaves.reserve(params.size());
    for (const auto& p : params) leaves.push_back(tape.leaf(p, /*requires_grad=*/true));
    Tensor<double> loss = f(tape, leaves);
    if (!loss.is_scalar()) throw ShapeError("grad_check: loss must be scalar");
    tape.backward(loss);
    std::vector<Matrix<double>> analytic;
    analytic.reserve(params.size());
    for (auto& l : leaves) analytic.push_back(tape.grad(l));
    double margin = tape.kink_margin();

    auto eval = [&](const std::vector<Matrix<double>>& at) {
        Tape<double> t;
        std::vector<Tensor<double>> ls;
        ls.reserve(at.size());
        for (const auto& p : at) ls.push_back(t.leaf(p, false));
        Tensor<double> out = f(t, ls);
        if (!out.is_scalar()) throw ShapeError("grad_check: loss must be scalar");
        margin = std::min(margin, t.kink_margin());
        return out.scalar_value();
    };

    std::vector<Matrix<double>> work = params;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        for (std::size_t k = 0; k < params[pi].data.size(); ++k) {
            const double saved = work[pi].data[k];
            work[pi].data[k] = saved + h;
            const double f_plus = eval(work);
            work[pi].data[k] = saved - h;
            const double f_minus = eval(work);
            work[pi].data[k] = saved;
            const double numeric = (f_plus - f_minus) / (2.0 * h);
            const double a = analytic[pi].data[k];
            const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
            if (rel > report.max_rel_err) report.max_rel_err = rel;
        }
    }
    report.near_kink = margin < 10.0 * h;
    return report;
}

} // namespace dgms
