#pragma once

// Tape-based reverse-mode automatic differentiation over dense matrices.
//
// Values are computed eagerly when an operation is recorded; backward() walks
// the tape once in reverse order and applies each node's derivative rule.
// Only nodes that (transitively) depend on a requires_grad leaf take part in
// the backward sweep, so constant subgraphs such as frozen network weights
// cost nothing there.

#include "autorecon/error.hpp"
#include "autorecon/tensor.hpp"

#include <algorithm>
#include <concepts>
#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace autorecon {

/// Closed set of recorded operations. Shape rules:
///   Add              [r x c] + [r x c], or [r x c] + [1 x c] (row broadcast)
///   Subtract         [r x c] - [r x c]
///   Multiply         elementwise, equal shapes
///   MatMul           [r x k] . [k x c]
///   Transpose        [r x c] -> [c x r]
///   Scale            multiply by attrs.factor
///   Tanh, Sigmoid    elementwise
///   ConcatRows       stacks inputs vertically, equal column counts
///   ConcatCols       stacks inputs horizontally, equal row counts
///   SliceRows        rows [begin, begin + count)
///   SliceCols        columns [begin, begin + count)
///   Sum              all elements -> [1 x 1]
///   MeanSquaredDiff  mean((a - b)^2) over all elements -> [1 x 1]
enum class Op : std::uint8_t {
    Leaf,
    Add,
    Subtract,
    Multiply,
    MatMul,
    Transpose,
    Scale,
    Tanh,
    Sigmoid,
    ConcatRows,
    ConcatCols,
    SliceRows,
    SliceCols,
    Sum,
    MeanSquaredDiff,
};

inline const char* op_name(Op op) {
    switch (op) {
        case Op::Leaf: return "leaf";
        case Op::Add: return "add";
        case Op::Subtract: return "subtract";
        case Op::Multiply: return "multiply";
        case Op::MatMul: return "matmul";
        case Op::Transpose: return "transpose";
        case Op::Scale: return "scale";
        case Op::Tanh: return "tanh";
        case Op::Sigmoid: return "sigmoid";
        case Op::ConcatRows: return "concat_rows";
        case Op::ConcatCols: return "concat_cols";
        case Op::SliceRows: return "slice_rows";
        case Op::SliceCols: return "slice_cols";
        case Op::Sum: return "sum";
        case Op::MeanSquaredDiff: return "mean_squared_diff";
    }
    return "unknown";
}

/// Non-tensor operands: slice bounds and the scale factor.
struct OpAttrs {
    Index begin = 0;
    Index count = 0;
    double factor = 1.0;
};

template <typename Scalar>
class BasicTape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives and
/// has not been cleared.
template <typename Scalar>
class BasicVar {
public:
    BasicVar() = default;

    std::size_t id() const { return id_; }
    BasicTape<Scalar>* tape() const { return tape_; }
    const MatrixX<Scalar>& value() const { return tape_->value(id_); }
    Index rows() const { return value().rows(); }
    Index cols() const { return value().cols(); }

private:
    friend class BasicTape<Scalar>;
    BasicVar(BasicTape<Scalar>* tape, std::size_t id) : tape_(tape), id_(id) {}

    BasicTape<Scalar>* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Result of backward(): d loss / d leaf for every requires_grad leaf.
template <typename Scalar>
class BasicGradients {
public:
    const MatrixX<Scalar>& operator[](const BasicVar<Scalar>& leaf) const {
        auto it = grads_.find(leaf.id());
        if (it == grads_.end()) {
            throw ValidationError("no gradient recorded for node " + std::to_string(leaf.id()) +
                                  " (not a requires_grad leaf)");
        }
        return it->second;
    }

    bool contains(const BasicVar<Scalar>& leaf) const { return grads_.count(leaf.id()) != 0; }
    std::size_t size() const { return grads_.size(); }

private:
    friend class BasicTape<Scalar>;
    std::unordered_map<std::size_t, MatrixX<Scalar>> grads_;
};

template <typename Scalar>
class BasicTape {
public:
    using Matrix = MatrixX<Scalar>;
    using Var = BasicVar<Scalar>;
    using Gradients = BasicGradients<Scalar>;

    BasicTape() = default;
    BasicTape(const BasicTape&) = delete;
    BasicTape& operator=(const BasicTape&) = delete;

    Var leaf(Matrix value, bool requires_grad = false) {
        if (value.size() == 0) {
            throw ValidationError("leaf: empty tensor " + shape_string(value));
        }
        if (!value.allFinite()) {
            throw ValidationError("leaf: non-finite input value");
        }
        Node node;
        node.op = Op::Leaf;
        node.value = std::move(value);
        node.requires_grad = requires_grad;
        node.is_leaf = true;
        nodes_.push_back(std::move(node));
        return Var(this, nodes_.size() - 1);
    }

    Var constant(Matrix value) { return leaf(std::move(value), false); }

    Var apply(Op op, std::span<const Var> inputs, OpAttrs attrs = {}) {
        for (const Var& v : inputs) {
            if (v.tape() != this || v.id() >= nodes_.size()) {
                throw ValidationError(std::string(op_name(op)) + ": input belongs to another tape");
            }
        }
        Node node;
        node.op = op;
        node.attrs = attrs;
        node.inputs.reserve(inputs.size());
        for (const Var& v : inputs) {
            node.inputs.push_back(v.id());
            node.requires_grad = node.requires_grad || nodes_[v.id()].requires_grad;
        }
        node.value = evaluate(op, node.inputs, attrs);
        if (!node.value.allFinite()) {
            throw NumericalError(std::string(op_name(op)) + ": produced a non-finite value");
        }
        nodes_.push_back(std::move(node));
        return Var(this, nodes_.size() - 1);
    }

    Var apply(Op op, std::initializer_list<Var> inputs, OpAttrs attrs = {}) {
        return apply(op, std::span<const Var>(inputs.begin(), inputs.size()), attrs);
    }

    /// Gradient of a scalar loss with respect to every requires_grad leaf
    /// recorded before it. Contributions from several consumers of one node are
    /// summed. Calling backward twice yields the same result.
    Gradients backward(const Var& loss) const {
        if (loss.tape() != this || loss.id() >= nodes_.size()) {
            throw ValidationError("backward: loss belongs to another tape");
        }
        const Matrix& loss_value = nodes_[loss.id()].value;
        if (loss_value.size() != 1) {
            throw ValidationError("backward: loss must be scalar, got " + shape_string(loss_value));
        }

        std::vector<Matrix> grads(loss.id() + 1);
        grads[loss.id()] = Matrix::Ones(1, 1);
        for (std::size_t i = loss.id() + 1; i-- > 0;) {
            const Node& node = nodes_[i];
            if (!node.requires_grad || node.is_leaf || grads[i].size() == 0) {
                continue;
            }
            propagate(node, grads[i], grads);
        }

        Gradients out;
        for (std::size_t i = 0; i <= loss.id(); ++i) {
            const Node& node = nodes_[i];
            if (!node.is_leaf || !node.requires_grad) {
                continue;
            }
            if (grads[i].size() == 0) {
                out.grads_.emplace(i, Matrix::Zero(node.value.rows(), node.value.cols()));
            } else {
                out.grads_.emplace(i, std::move(grads[i]));
            }
        }
        return out;
    }

    const Matrix& value(std::size_t id) const { return nodes_.at(id).value; }
    bool requires_grad(const Var& v) const { return nodes_.at(v.id()).requires_grad; }
    std::size_t size() const { return nodes_.size(); }

    /// Drops every node. Outstanding Vars become invalid.
    void clear() { nodes_.clear(); }

private:
    struct Node {
        Op op = Op::Leaf;
        std::vector<std::size_t> inputs;
        OpAttrs attrs;
        Matrix value;
        bool requires_grad = false;
        bool is_leaf = false;
    };

    [[noreturn]] static void shape_error(Op op, const Matrix& a, const Matrix& b) {
        throw ValidationError(std::string(op_name(op)) + ": shape mismatch " + shape_string(a) +
                              " vs " + shape_string(b));
    }

    static void expect_arity(Op op, std::size_t got, std::size_t want) {
        if (got != want) {
            throw ValidationError(std::string(op_name(op)) + ": expected " + std::to_string(want) +
                                  " inputs, got " + std::to_string(got));
        }
    }

    Matrix evaluate(Op op, const std::vector<std::size_t>& in, const OpAttrs& attrs) const {
        auto arg = [&](std::size_t k) -> const Matrix& { return nodes_[in[k]].value; };
        switch (op) {
            case Op::Leaf:
                throw ValidationError("apply: use leaf() to create leaves");
            case Op::Add: {
                expect_arity(op, in.size(), 2);
                const Matrix& a = arg(0);
                const Matrix& b = arg(1);
                if (a.rows() == b.rows() && a.cols() == b.cols()) {
                    return a + b;
                }
                if (b.rows() == 1 && a.cols() == b.cols()) {
                    return a.rowwise() + b.row(0);
                }
                shape_error(op, a, b);
            }
            case Op::Subtract:
            case Op::Multiply:
            case Op::MeanSquaredDiff: {
                expect_arity(op, in.size(), 2);
                const Matrix& a = arg(0);
                const Matrix& b = arg(1);
                if (a.rows() != b.rows() || a.cols() != b.cols()) {
                    shape_error(op, a, b);
                }
                if (op == Op::Subtract) {
                    return a - b;
                }
                if (op == Op::Multiply) {
                    return a.cwiseProduct(b);
                }
                Matrix out(1, 1);
                out(0, 0) = (a - b).squaredNorm() / static_cast<Scalar>(a.size());
                return out;
            }
            case Op::MatMul: {
                expect_arity(op, in.size(), 2);
                const Matrix& a = arg(0);
                const Matrix& b = arg(1);
                if (a.cols() != b.rows()) {
                    shape_error(op, a, b);
                }
                Matrix out(a.rows(), b.cols());
                out.noalias() = a * b;
                return out;
            }
            case Op::Transpose:
                expect_arity(op, in.size(), 1);
                return arg(0).transpose();
            case Op::Scale:
                expect_arity(op, in.size(), 1);
                return arg(0) * static_cast<Scalar>(attrs.factor);
            case Op::Tanh:
                expect_arity(op, in.size(), 1);
                return arg(0).array().tanh().matrix();
            case Op::Sigmoid:
                expect_arity(op, in.size(), 1);
                return (Scalar(1) / (Scalar(1) + (-arg(0).array()).exp())).matrix();
            case Op::ConcatRows:
            case Op::ConcatCols: {
                if (in.empty()) {
                    throw ValidationError(std::string(op_name(op)) + ": no inputs");
                }
                const bool rows = op == Op::ConcatRows;
                Index total = 0;
                for (std::size_t k = 0; k < in.size(); ++k) {
                    const Matrix& m = arg(k);
                    if (rows ? m.cols() != arg(0).cols() : m.rows() != arg(0).rows()) {
                        shape_error(op, arg(0), m);
                    }
                    total += rows ? m.rows() : m.cols();
                }
                Matrix out = rows ? Matrix(total, arg(0).cols()) : Matrix(arg(0).rows(), total);
                Index offset = 0;
                for (std::size_t k = 0; k < in.size(); ++k) {
                    const Matrix& m = arg(k);
                    if (rows) {
                        out.middleRows(offset, m.rows()) = m;
                        offset += m.rows();
                    } else {
                        out.middleCols(offset, m.cols()) = m;
                        offset += m.cols();
                    }
                }
                return out;
            }
            case Op::SliceRows:
            case Op::SliceCols: {
                expect_arity(op, in.size(), 1);
                const Matrix& a = arg(0);
                const Index extent = op == Op::SliceRows ? a.rows() : a.cols();
                if (attrs.begin < 0 || attrs.count < 1 || attrs.begin + attrs.count > extent) {
                    throw ValidationError(std::string(op_name(op)) + ": range [" +
                                          std::to_string(attrs.begin) + ", " +
                                          std::to_string(attrs.begin + attrs.count) +
                                          ") out of bounds for " + shape_string(a));
                }
                if (op == Op::SliceRows) {
                    return a.middleRows(attrs.begin, attrs.count);
                }
                return a.middleCols(attrs.begin, attrs.count);
            }
            case Op::Sum: {
                expect_arity(op, in.size(), 1);
                Matrix out(1, 1);
                out(0, 0) = arg(0).sum();
                return out;
            }
        }
        throw ValidationError("apply: unknown op");
    }

    void propagate(const Node& node, const Matrix& g, std::vector<Matrix>& grads) const {
        const auto& in = node.inputs;
        auto wants = [&](std::size_t k) { return nodes_[in[k]].requires_grad; };
        auto slot = [&](std::size_t k) -> Matrix& {
            Matrix& s = grads[in[k]];
            if (s.size() == 0) {
                const Matrix& v = nodes_[in[k]].value;
                s = Matrix::Zero(v.rows(), v.cols());
            }
            return s;
        };
        auto arg = [&](std::size_t k) -> const Matrix& { return nodes_[in[k]].value; };

        switch (node.op) {
            case Op::Leaf:
                break;
            case Op::Add:
                if (wants(0)) {
                    slot(0) += g;
                }
                if (wants(1)) {
                    if (arg(1).rows() == g.rows()) {
                        slot(1) += g;
                    } else {
                        slot(1) += g.colwise().sum();
                    }
                }
                break;
            case Op::Subtract:
                if (wants(0)) {
                    slot(0) += g;
                }
                if (wants(1)) {
                    slot(1) -= g;
                }
                break;
            case Op::Multiply:
                if (wants(0)) {
                    slot(0) += g.cwiseProduct(arg(1));
                }
                if (wants(1)) {
                    slot(1) += g.cwiseProduct(arg(0));
                }
                break;
            case Op::MatMul:
                if (wants(0)) {
                    slot(0).noalias() += g * arg(1).transpose();
                }
                if (wants(1)) {
                    slot(1).noalias() += arg(0).transpose() * g;
                }
                break;
            case Op::Transpose:
                slot(0) += g.transpose();
                break;
            case Op::Scale:
                slot(0) += g * static_cast<Scalar>(node.attrs.factor);
                break;
            case Op::Tanh:
                slot(0).array() += g.array() * (Scalar(1) - node.value.array().square());
                break;
            case Op::Sigmoid:
                slot(0).array() += g.array() * node.value.array() * (Scalar(1) - node.value.array());
                break;
            case Op::ConcatRows:
            case Op::ConcatCols: {
                Index offset = 0;
                for (std::size_t k = 0; k < in.size(); ++k) {
                    const Matrix& m = arg(k);
                    const Index extent = node.op == Op::ConcatRows ? m.rows() : m.cols();
                    if (wants(k)) {
                        if (node.op == Op::ConcatRows) {
                            slot(k) += g.middleRows(offset, extent);
                        } else {
                            slot(k) += g.middleCols(offset, extent);
                        }
                    }
                    offset += extent;
                }
                break;
            }
            case Op::SliceRows:
                slot(0).middleRows(node.attrs.begin, node.attrs.count) += g;
                break;
            case Op::SliceCols:
                slot(0).middleCols(node.attrs.begin, node.attrs.count) += g;
                break;
            case Op::Sum:
                slot(0).array() += g(0, 0);
                break;
            case Op::MeanSquaredDiff: {
                const Scalar s = g(0, 0) * Scalar(2) / static_cast<Scalar>(arg(0).size());
                if (wants(0)) {
                    slot(0) += s * (arg(0) - arg(1));
                }
                if (wants(1)) {
                    slot(1) -= s * (arg(0) - arg(1));
                }
                break;
            }
        }
    }

    std::vector<Node> nodes_;
};

using Tape = BasicTape<double>;
using Var = BasicVar<double>;
using Gradients = BasicGradients<double>;

// Expression-style wrappers. All operands must live on the same tape.

template <typename Scalar>
BasicVar<Scalar> operator+(const BasicVar<Scalar>& a, const BasicVar<Scalar>& b) {
    return a.tape()->apply(Op::Add, {a, b});
}

template <typename Scalar>
BasicVar<Scalar> operator-(const BasicVar<Scalar>& a, const BasicVar<Scalar>& b) {
    return a.tape()->apply(Op::Subtract, {a, b});
}

template <typename Scalar>
BasicVar<Scalar> hadamard(const BasicVar<Scalar>& a, const BasicVar<Scalar>& b) {
    return a.tape()->apply(Op::Multiply, {a, b});
}

template <typename Scalar>
BasicVar<Scalar> matmul(const BasicVar<Scalar>& a, const BasicVar<Scalar>& b) {
    return a.tape()->apply(Op::MatMul, {a, b});
}

template <typename Scalar>
BasicVar<Scalar> transpose(const BasicVar<Scalar>& a) {
    return a.tape()->apply(Op::Transpose, {a});
}

template <typename Scalar>
BasicVar<Scalar> scale(const BasicVar<Scalar>& a, double factor) {
    return a.tape()->apply(Op::Scale, {a}, OpAttrs{0, 0, factor});
}

template <typename Scalar>
BasicVar<Scalar> operator*(double factor, const BasicVar<Scalar>& a) {
    return scale(a, factor);
}

template <typename Scalar>
BasicVar<Scalar> tanh(const BasicVar<Scalar>& a) {
    return a.tape()->apply(Op::Tanh, {a});
}

template <typename Scalar>
BasicVar<Scalar> sigmoid(const BasicVar<Scalar>& a) {
    return a.tape()->apply(Op::Sigmoid, {a});
}

template <typename Scalar>
BasicVar<Scalar> concat_rows(std::span<const BasicVar<Scalar>> parts) {
    if (parts.empty()) {
        throw ValidationError("concat_rows: no inputs");
    }
    return parts.front().tape()->apply(Op::ConcatRows, parts);
}

template <typename Scalar>
BasicVar<Scalar> concat_cols(std::span<const BasicVar<Scalar>> parts) {
    if (parts.empty()) {
        throw ValidationError("concat_cols: no inputs");
    }
    return parts.front().tape()->apply(Op::ConcatCols, parts);
}

template <typename Scalar>
BasicVar<Scalar> concat_rows(const std::vector<BasicVar<Scalar>>& parts) {
    return concat_rows(std::span<const BasicVar<Scalar>>(parts));
}
template <typename Scalar>
BasicVar<Scalar> concat_cols(const std::vector<BasicVar<Scalar>>& parts) {
    return concat_cols(std::span<const BasicVar<Scalar>>(parts));
}

template <typename Scalar>
BasicVar<Scalar> slice_rows(const BasicVar<Scalar>& a, Index begin, Index count) {
    return a.tape()->apply(Op::SliceRows, {a}, OpAttrs{begin, count, 1.0});
}

template <typename Scalar>
BasicVar<Scalar> slice_cols(const BasicVar<Scalar>& a, Index begin, Index count) {
    return a.tape()->apply(Op::SliceCols, {a}, OpAttrs{begin, count, 1.0});
}

template <typename Scalar>
BasicVar<Scalar> sum(const BasicVar<Scalar>& a) {
    return a.tape()->apply(Op::Sum, {a});
}

template <typename Scalar>
BasicVar<Scalar> mean_squared_difference(const BasicVar<Scalar>& a, const BasicVar<Scalar>& b) {
    return a.tape()->apply(Op::MeanSquaredDiff, {a, b});
}

/// Builds a scalar loss on a fresh tape from leaves holding the probe values.
/// Must be a pure function of the leaf values; anything else makes the
/// finite-difference comparison meaningless.
using LossBuilder = std::function<Var(Tape&, std::span<const Var>)>;

namespace detail {

template <typename ProbeScalar, typename Build>
std::vector<Tensor> analytic_gradients(Build&& build, const std::vector<Tensor>& xs) {
    Tape tape;
    std::vector<Var> leaves;
    leaves.reserve(xs.size());
    for (const Tensor& x : xs) {
        leaves.push_back(tape.leaf(x, true));
    }
    const Var loss = build(tape, std::span<const Var>(leaves));
    const Gradients grads = tape.backward(loss);
    std::vector<Tensor> out;
    for (const Var& leaf : leaves) {
        out.push_back(grads[leaf]);
    }
    return out;
}

template <typename ProbeScalar, typename Build>
ProbeScalar probe_loss(Build&& build, const std::vector<MatrixX<ProbeScalar>>& probe) {
    BasicTape<ProbeScalar> tape;
    std::vector<BasicVar<ProbeScalar>> leaves;
    leaves.reserve(probe.size());
    for (const auto& x : probe) {
        leaves.push_back(tape.leaf(x, true));
    }
    const auto loss = build(tape, std::span<const BasicVar<ProbeScalar>>(leaves));
    if (loss.value().size() != 1) {
        throw ValidationError("grad_check: loss must be scalar");
    }
    return loss.value()(0, 0);
}

template <typename ProbeScalar, typename Build>
double compare_central_differences(Build&& build, const std::vector<Tensor>& xs,
                                   const std::vector<Tensor>& analytic, double eps) {
    std::vector<MatrixX<ProbeScalar>> probe;
    for (const Tensor& x : xs) {
        probe.push_back(x.template cast<ProbeScalar>());
    }
    double worst = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        for (Index i = 0; i < xs[k].size(); ++i) {
            const ProbeScalar x0 = probe[k].data()[i];
            probe[k].data()[i] = x0 + static_cast<ProbeScalar>(eps);
            const ProbeScalar up = probe_loss<ProbeScalar>(build, probe);
            probe[k].data()[i] = x0 - static_cast<ProbeScalar>(eps);
            const ProbeScalar down = probe_loss<ProbeScalar>(build, probe);
            probe[k].data()[i] = x0;

            const double numeric = static_cast<double>((up - down) / (2 * static_cast<ProbeScalar>(eps)));
            const double exact = analytic[k].data()[i];
            const double denom = std::max({std::abs(exact), std::abs(numeric), 1e-12});
            worst = std::max(worst, std::abs(exact - numeric) / denom);
        }
    }
    return worst;
}

inline void check_eps(double eps) {
    if (!(eps >= 1e-8 && eps <= 1e-4)) {
        throw ValidationError("grad_check: eps must lie in [1e-8, 1e-4]");
    }
}

}  // namespace detail

/// Largest relative disagreement between the reverse-mode gradient and a
/// central difference, over every component of every input:
///   |analytic - numeric| / max(|analytic|, |numeric|, 1e-12).
inline double grad_check(const LossBuilder& f, const std::vector<Tensor>& xs, double eps = 1e-6) {
    detail::check_eps(eps);
    const auto analytic = detail::analytic_gradients<double>(f, xs);
    return detail::compare_central_differences<double>(f, xs, analytic, eps);
}

inline double grad_check(const std::function<Var(Tape&, Var)>& f, const Tensor& x, double eps = 1e-6) {
    return grad_check([&](Tape& tape, std::span<const Var> leaves) { return f(tape, leaves[0]); },
                      std::vector<Tensor>{x}, eps);
}

/// Same comparison for a builder that is generic in the tape scalar. The
/// gradient under test is computed in double; the difference quotients are
/// evaluated in long double, which resolves components far below what
/// double-precision differences can (e.g. 1e-9 entries next to O(1) losses).
template <typename Builder>
    requires std::invocable<Builder&, BasicTape<long double>&, std::span<const BasicVar<long double>>> &&
             std::invocable<Builder&, Tape&, std::span<const Var>>
double grad_check(Builder&& f, const std::vector<Tensor>& xs, double eps = 1e-6) {
    detail::check_eps(eps);
    const auto analytic = detail::analytic_gradients<double>(f, xs);
    return detail::compare_central_differences<long double>(f, xs, analytic, eps);
}

}  // namespace autorecon
