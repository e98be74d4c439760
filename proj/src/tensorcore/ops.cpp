#include "fog/tensorcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

namespace fog {

std::string shape_to_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << " x ";
        os << shape[i];
    }
    os << ']';
    return os.str();
}

namespace {

template <typename T>
Tape<T>& tape_of(Var<T> a) {
    if (!a.valid()) throw TapeError("operation on an unbound variable");
    return *a.tape();
}

template <typename T>
Tape<T>& tape_of(Var<T> a, Var<T> b) {
    if (!a.valid() || a.tape() != b.tape()) throw TapeError("operands live on different tapes");
    return *a.tape();
}

template <typename T>
void require_same_shape(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                             shape_to_string(b.shape()));
    }
}

template <typename T>
void require_matrix(const char* op, const Tensor<T>& a) {
    if (a.rank() != 2) {
        throw RankError(std::string(op) + ": expected a matrix, got shape " + shape_to_string(a.shape()));
    }
}

using SharedIndex = std::shared_ptr<const IndexVector>;

}  // namespace

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
    Tape<T>& tape = tape_of(a, b);
    const Tensor<T>& A = a.value();
    const Tensor<T>& B = b.value();
    require_matrix("matmul", A);
    require_matrix("matmul", B);
    const std::size_t m = A.shape()[0], k = A.shape()[1], n = B.shape()[1];
    if (B.shape()[0] != k) {
        throw DimensionError("matmul: inner extents disagree for " + shape_to_string(A.shape()) + " and " +
                             shape_to_string(B.shape()));
    }
    Tensor<T> C({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        T* c = &C[i * n];
        for (std::size_t p = 0; p < k; ++p) {
            const T av = A[i * k + p];
            if (av == T{0}) continue;
            const T* brow = &B[p * n];
            for (std::size_t j = 0; j < n; ++j) c[j] += av * brow[j];
        }
    }
    const std::size_t ia = a.id(), ib = b.id();
    return tape.record(std::move(C), {ia, ib},
                       [ia, ib, m, k, n](Tape<T>& t, std::size_t self) {
                           const Tensor<T>& g = t.grad_of(self);
                           const Tensor<T>& A = t.value(ia);
                           const Tensor<T>& B = t.value(ib);
                           if (t.needs_grad(ia)) {
                               Tensor<T>& gA = t.grad_accumulator(ia);
                               for (std::size_t i = 0; i < m; ++i)
                                   for (std::size_t p = 0; p < k; ++p) {
                                       T acc{0};
                                       for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * B[p * n + j];
                                       gA[i * k + p] += acc;
                                   }
                           }
                           if (t.needs_grad(ib)) {
                               Tensor<T>& gB = t.grad_accumulator(ib);
                               for (std::size_t i = 0; i < m; ++i)
                                   for (std::size_t p = 0; p < k; ++p) {
                                       const T av = A[i * k + p];
                                       for (std::size_t j = 0; j < n; ++j) gB[p * n + j] += av * g[i * n + j];
                                   }
                           }
                       },
                       "matmul");
}

template <typename T>
Var<T> matmul_transposed(Var<T> a, Var<T> b) {
    Tape<T>& tape = tape_of(a, b);
    const Tensor<T>& A = a.value();
    const Tensor<T>& B = b.value();
    require_matrix("matmul_transposed", A);
    require_matrix("matmul_transposed", B);
    const std::size_t m = A.shape()[0], k = A.shape()[1], n = B.shape()[0];
    if (B.shape()[1] != k) {
        throw DimensionError("matmul_transposed: inner extents disagree for " + shape_to_string(A.shape()) +
                             " and transpose of " + shape_to_string(B.shape()));
    }
    Tensor<T> C({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        const T* arow = &A[i * k];
        for (std::size_t j = 0; j < n; ++j) {
            const T* brow = &B[j * k];
            T acc{0};
            for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
            C[i * n + j] = acc;
        }
    }
    const std::size_t ia = a.id(), ib = b.id();
    return tape.record(std::move(C), {ia, ib},
                       [ia, ib, m, k, n](Tape<T>& t, std::size_t self) {
                           const Tensor<T>& g = t.grad_of(self);
                           const Tensor<T>& A = t.value(ia);
                           const Tensor<T>& B = t.value(ib);
                           if (t.needs_grad(ia)) {
                               Tensor<T>& gA = t.grad_accumulator(ia);
                               for (std::size_t i = 0; i < m; ++i) {
                                   T* ga = &gA[i * k];
                                   for (std::size_t j = 0; j < n; ++j) {
                                       const T gv = g[i * n + j];
                                       if (gv == T{0}) continue;
                                       const T* brow = &B[j * k];
                                       for (std::size_t p = 0; p < k; ++p) ga[p] += gv * brow[p];
                                   }
                               }
                           }
                           if (t.needs_grad(ib)) {
                               Tensor<T>& gB = t.grad_accumulator(ib);
                               for (std::size_t i = 0; i < m; ++i) {
                                   const T* arow = &A[i * k];
                                   for (std::size_t j = 0; j < n; ++j) {
                                       const T gv = g[i * n + j];
                                       if (gv == T{0}) continue;
                                       T* gb = &gB[j * k];
                                       for (std::size_t p = 0; p < k; ++p) gb[p] += gv * arow[p];
                                   }
                               }
                           }
                       },
                       "matmul_transposed");
}

namespace {

enum class Binary { add, sub, mul, div };

template <typename T>
Var<T> binary(Var<T> a, Var<T> b, Binary kind, const char* name) {
    Tape<T>& tape = tape_of(a, b);
    const Tensor<T>& A = a.value();
    const Tensor<T>& B = b.value();
    require_same_shape(name, A, B);
    Tensor<T> out(A.shape());
    for (std::size_t i = 0; i < out.size(); ++i) {
        switch (kind) {
            case Binary::add: out[i] = A[i] + B[i]; break;
            case Binary::sub: out[i] = A[i] - B[i]; break;
            case Binary::mul: out[i] = A[i] * B[i]; break;
            case Binary::div: out[i] = A[i] / B[i]; break;
        }
    }
    const std::size_t ia = a.id(), ib = b.id();
    return tape.record(std::move(out), {ia, ib},
                       [ia, ib, kind](Tape<T>& t, std::size_t self) {
                           const Tensor<T>& g = t.grad_of(self);
                           const Tensor<T>& A = t.value(ia);
                           const Tensor<T>& B = t.value(ib);
                           if (t.needs_grad(ia)) {
                               Tensor<T>& gA = t.grad_accumulator(ia);
                               for (std::size_t i = 0; i < g.size(); ++i) {
                                   switch (kind) {
                                       case Binary::add:
                                       case Binary::sub: gA[i] += g[i]; break;
                                       case Binary::mul: gA[i] += g[i] * B[i]; break;
                                       case Binary::div: gA[i] += g[i] / B[i]; break;
                                   }
                               }
                           }
                           if (t.needs_grad(ib)) {
                               Tensor<T>& gB = t.grad_accumulator(ib);
                               for (std::size_t i = 0; i < g.size(); ++i) {
                                   switch (kind) {
                                       case Binary::add: gB[i] += g[i]; break;
                                       case Binary::sub: gB[i] -= g[i]; break;
                                       case Binary::mul: gB[i] += g[i] * A[i]; break;
                                       case Binary::div: gB[i] -= g[i] * A[i] / (B[i] * B[i]); break;
                                   }
                               }
                           }
                       },
                       name);
}

}  // namespace

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
    return binary(a, b, Binary::add, "add");
}
template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
    return binary(a, b, Binary::sub, "sub");
}
template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
    return binary(a, b, Binary::mul, "mul");
}
template <typename T>
Var<T> div(Var<T> a, Var<T> b) {
    return binary(a, b, Binary::div, "div");
}

template <typename T>
Var<T> scale(Var<T> x, double c) {
    Tape<T>& tape = tape_of(x);
    const T cc = static_cast<T>(c);
    Tensor<T> out = x.value();
    for (auto& v : out.storage()) v *= cc;
    const std::size_t ix = x.id();
    return tape.record(std::move(out), {ix},
                       [ix, cc](Tape<T>& t, std::size_t self) {
                           const Tensor<T>& g = t.grad_of(self);
                           Tensor<T>& gx = t.grad_accumulator(ix);
                           for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * cc;
                       },
                       "scale");
}

template <typename T>
Var<T> add_scalar(Var<T> x, double c) {
    Tape<T>& tape = tape_of(x);
    const T cc = static_cast<T>(c);
    Tensor<T> out = x.value();
    for (auto& v : out.storage()) v += cc;
    const std::size_t ix = x.id();
    return tape.record(std::move(out), {ix},
                       [ix](Tape<T>& t, std::size_t self) {
                           const Tensor<T>& g = t.grad_of(self);
                           Tensor<T>& gx = t.grad_accumulator(ix);
                           for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                       },
                       "add_scalar");
}

template <typename T>
Var<T> scale_by(Var<T> x, Var<T> s) {
    Tape<T>& tape = tape_of(x, s);
    if (s.value().size() != 1) {
        throw DimensionError("scale_by: scale must have one element, got " + shape_to_string(s.shape()));
    }
    const T sv = s.value()[0];
    Tensor<T> out = x.value();
    for (auto& v : out.storage()) v *= sv;
    const std::size_t ix = x.id(), is = s.id();
    return tape.record(std::move(out), {ix, is},
                       [ix, is](Tape<T>& t, std::size_t self) {
                           const Tensor<T>& g = t.grad_of(self);
                           const Tensor<T>& X = t.value(ix);
                           const T sv = t.value(is)[0];
                           if (t.needs_grad(ix)) {
                               Tensor<T>& gx = t.grad_accumulator(ix);
                               for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * sv;
                           }
                           if (t.needs_grad(is)) {
                               T acc{0};
                               for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * X[i];
                               t.grad_accumulator(is)[0] += acc;
                           }
                       },
                       "scale_by");
}

template <typename T>
Var<T> add_bias(Var<T> x, Var<T> bias) {
    Tape<T>& tape = tape_of(x, bias);
    const Tensor<T>& X = x.value();
    const Tensor<T>& b = bias.value();
    const std::size_t c = X.channels();
    if (b.size() != c) {
        throw DimensionError("add_bias: bias " + shape_to_string(b.shape()) + " does not match channels of " +
                             shape_to_string(X.shape()));
    }
    Tensor<T> out = X;
    const std::size_t rows = c == 0 ? 0 : X.size() / c;
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < c; ++j) out[r * c + j] += b[j];
    const std::size_t ix = x.id(), ib = bias.id();
    return tape.record(std::move(out), {ix, ib},
                       [ix, ib, rows, c](Tape<T>& t, std::size_t self) {
                           const Tensor<T>& g = t.grad_of(self);
                           if (t.needs_grad(ix)) {
                               Tensor<T>& gx = t.grad_accumulator(ix);
                               for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                           }
                           if (t.needs_grad(ib)) {
                               Tensor<T>& gb = t.grad_accumulator(ib);
                               for (std::size_t r = 0; r < rows; ++r)
                                   for (std::size_t j = 0; j < c; ++j) gb[j] += g[r * c + j];
                           }
                       },
                       "add_bias");
}

template <typename T>
Var<T> activation(Var<T> x, Activation act) {
    Tape<T>& tape = tape_of(x);
    const Tensor<T>& X = x.value();
    Tensor<T> out(X.shape());
    const T alpha = static_cast<T>(act.alpha);
    for (std::size_t i = 0; i < X.size(); ++i) {
        const T v = X[i];
        switch (act.kind) {
            case ActivationKind::identity: out[i] = v; break;
            case ActivationKind::relu: out[i] = v > T{0} ? v : T{0}; break;
            case ActivationKind::leaky_relu: out[i] = v > T{0} ? v : alpha * v; break;
            case ActivationKind::elu: out[i] = v > T{0} ? v : alpha * std::expm1(v); break;
            case ActivationKind::sigmoid: out[i] = T{1} / (T{1} + std::exp(-v)); break;
        }
    }
    const std::size_t ix = x.id();
    return tape.record(std::move(out), {ix},
                       [ix, act, alpha](Tape<T>& t, std::size_t self) {
                           const Tensor<T>& g = t.grad_of(self);
                           const Tensor<T>& X = t.value(ix);
                           const Tensor<T>& Y = t.value(self);
                           Tensor<T>& gx = t.grad_accumulator(ix);
                           for (std::size_t i = 0; i < g.size(); ++i) {
                               T d{1};
                               switch (act.kind) {
                                   case ActivationKind::identity: d = T{1}; break;
                                   case ActivationKind::relu: d = X[i] > T{0} ? T{1} : T{0}; break;
                                   case ActivationKind::leaky_relu: d = X[i] > T{0} ? T{1} : alpha; break;
                                   case ActivationKind::elu: d = X[i] > T{0} ? T{1} : Y[i] + alpha; break;
                                   case ActivationKind::sigmoid: d = Y[i] * (T{1} - Y[i]); break;
                               }
                               gx[i] += g[i] * d;
                           }
                       },
                       "activation");
}

template <typename T>
Var<T> concat(Var<T> a, Var<T> b) {
    Tape<T>& tape = tape_of(a, b);
    const Tensor<T>& A = a.value();
    const Tensor<T>& B = b.value();
    if (A.rank() != B.rank() || A.rank() == 0 ||
        !std::equal(A.shape().begin(), A.shape().end() - 1, B.shape().begin())) {
        throw DimensionError("concat: leading extents disagree for " + shape_to_string(A.shape()) + " and " +
                             shape_to_string(B.shape()));
    }
    const std::size_t ca = A.channels(), cb = B.channels(), c = ca + cb;
    Shape shape = A.shape();
    shape.back() = c;
    Tensor<T> out(shape);
    const std::size_t rows = shape_size(Shape(shape.begin(), shape.end() - 1));
    for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(A.storage().data() + r * ca, ca, out.storage().data() + r * c);
        std::copy_n(B.storage().data() + r * cb, cb, out.storage().data() + r * c + ca);
    }
    const std::size_t ia = a.id(), ib = b.id();
    return tape.record(std::move(out), {ia, ib},
                       [ia, ib, rows, ca, cb, c](Tape<T>& t, std::size_t self) {
                           const Tensor<T>& g = t.grad_of(self);
                           if (t.needs_grad(ia) && ca > 0) {
                               Tensor<T>& gA = t.grad_accumulator(ia);
                               for (std::size_t r = 0; r < rows; ++r)
                                   for (std::size_t j = 0; j < ca; ++j) gA[r * ca + j] += g[r * c + j];
                           }
                           if (t.needs_grad(ib) && cb > 0) {
                               Tensor<T>& gB = t.grad_accumulator(ib);
                               for (std::size_t r = 0; r < rows; ++r)
                                   for (std::size_t j = 0; j < cb; ++j) gB[r * cb + j] += g[r * c + ca + j];
                           }
                       },
                       "concat");
}

template <typename T>
Var<T> slice_channels(Var<T> x, std::size_t begin, std::size_t count) {
    Tape<T>& tape = tape_of(x);
    const Tensor<T>& X = x.value();
    if (X.rank() == 0) throw RankError("slice_channels: scalar input");
    const std::size_t c = X.channels();
    if (begin + count > c) {
        throw IndexError("slice_channels: range [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") exceeds " + std::to_string(c) + " channels");
    }
    Shape shape = X.shape();
    shape.back() = count;
    Tensor<T> out(shape);
    const std::size_t rows = c == 0 ? 0 : X.size() / c;
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < count; ++j) out[r * count + j] = X[r * c + begin + j];
    const std::size_t ix = x.id();
    return tape.record(std::move(out), {ix},
                       [ix, rows, c, begin, count](Tape<T>& t, std::size_t self) {
                           const Tensor<T>& g = t.grad_of(self);
                           Tensor<T>& gx = t.grad_accumulator(ix);
                           for (std::size_t r = 0; r < rows; ++r)
                               for (std::size_t j = 0; j < count; ++j) gx[r * c + begin + j] += g[r * count + j];
                       },
                       "slice_channels");
}

template <typename T>
Var<T> reshape(Var<T> x, Shape shape) {
    Tape<T>& tape = tape_of(x);
    Tensor<T> out = x.value().reshaped(std::move(shape));
    const std::size_t ix = x.id();
    return tape.record(std::move(out), {ix},
                       [ix](Tape<T>& t, std::size_t self) {
                           const Tensor<T>& g = t.grad_of(self);
                           Tensor<T>& gx = t.grad_accumulator(ix);
                           for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                       },
                       "reshape");
}

template <typename T>
Var<T> kron(Var<T> a, Var<T> b) {
    if (a.value().rank() != 1 || b.value().rank() != 1) {
        throw RankError("kron: both operands must be vectors, got " + shape_to_string(a.shape()) + " and " +
                        shape_to_string(b.shape()));
    }
    const std::size_t ca = a.value().size(), cb = b.value().size();
    Var<T> rows = rowwise_kron(reshape(a, Shape{1, ca}), reshape(b, Shape{1, cb}));
    return reshape(rows, Shape{ca * cb});
}

template <typename T>
Var<T> rowwise_kron(Var<T> a, Var<T> b) {
    Tape<T>& tape = tape_of(a, b);
    const Tensor<T>& A = a.value();
    const Tensor<T>& B = b.value();
    require_matrix("rowwise_kron", A);
    require_matrix("rowwise_kron", B);
    const std::size_t n = A.shape()[0], ca = A.shape()[1], cb = B.shape()[1];
    if (B.shape()[0] != n) {
        throw DimensionError("rowwise_kron: row counts disagree for " + shape_to_string(A.shape()) + " and " +
                             shape_to_string(B.shape()));
    }
    const std::size_t c = ca * cb;
    Tensor<T> out({n, c});
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t i = 0; i < ca; ++i) {
            const T av = A[r * ca + i];
            for (std::size_t j = 0; j < cb; ++j) out[r * c + i * cb + j] = av * B[r * cb + j];
        }
    const std::size_t ia = a.id(), ib = b.id();
    return tape.record(std::move(out), {ia, ib},
                       [ia, ib, n, ca, cb, c](Tape<T>& t, std::size_t self) {
                           const Tensor<T>& g = t.grad_of(self);
                           const Tensor<T>& A = t.value(ia);
                           const Tensor<T>& B = t.value(ib);
                           if (t.needs_grad(ia)) {
                               Tensor<T>& gA = t.grad_accumulator(ia);
                               for (std::size_t r = 0; r < n; ++r)
                                   for (std::size_t i = 0; i < ca; ++i) {
                                       T acc{0};
                                       for (std::size_t j = 0; j < cb; ++j) acc += g[r * c + i * cb + j] * B[r * cb + j];
                                       gA[r * ca + i] += acc;
                                   }
                           }
                           if (t.needs_grad(ib)) {
                               Tensor<T>& gB = t.grad_accumulator(ib);
                               for (std::size_t r = 0; r < n; ++r)
                                   for (std::size_t i = 0; i < ca; ++i) {
                                       const T av = A[r * ca + i];
                                       for (std::size_t j = 0; j < cb; ++j) gB[r * cb + j] += g[r * c + i * cb + j] * av;
                                   }
                           }
                       },
                       "rowwise_kron");
}

template <typename T>
Var<T> gather_rows(Var<T> x, const IndexVector& index) {
    Tape<T>& tape = tape_of(x);
    const Tensor<T>& X = x.value();
    if (X.rank() == 0) throw RankError("gather_rows: scalar input");
    const std::size_t n = X.rows(), w = X.row_width();
    for (std::uint32_t i : index) {
        if (i >= n) throw IndexError("gather_rows: index " + std::to_string(i) + " out of range for " +
                                     std::to_string(n) + " rows");
    }
    Shape shape = X.shape();
    shape[0] = index.size();
    Tensor<T> out(shape);
    for (std::size_t e = 0; e < index.size(); ++e) std::copy_n(X.storage().data() + index[e] * w, w, out.storage().data() + e * w);
    auto idx = std::make_shared<const IndexVector>(index);
    const std::size_t ix = x.id();
    return tape.record(std::move(out), {ix},
                       [ix, idx, w](Tape<T>& t, std::size_t self) {
                           const Tensor<T>& g = t.grad_of(self);
                           Tensor<T>& gx = t.grad_accumulator(ix);
                           const IndexVector& index = *idx;
                           for (std::size_t e = 0; e < index.size(); ++e) {
                               T* dst = &gx[index[e] * w];
                               const T* src = &g[e * w];
                               for (std::size_t j = 0; j < w; ++j) dst[j] += src[j];
                           }
                       },
                       "gather_rows");
}

template <typename T>
Var<T> segment_sum(Var<T> values, const IndexVector& segments, std::size_t n_segments) {
    Tape<T>& tape = tape_of(values);
    const Tensor<T>& V = values.value();
    if (V.rank() == 0) throw RankError("segment_sum: scalar input");
    if (V.rows() != segments.size()) {
        throw DimensionError("segment_sum: " + std::to_string(V.rows()) + " rows but " +
                             std::to_string(segments.size()) + " segment ids");
    }
    for (std::uint32_t s : segments) {
        if (s >= n_segments) throw IndexError("segment_sum: segment id " + std::to_string(s) + " out of range for " +
                                              std::to_string(n_segments) + " segments");
    }
    const std::size_t w = V.row_width();
    Shape shape = V.shape();
    shape[0] = n_segments;
    Tensor<T> out(shape);
    for (std::size_t e = 0; e < segments.size(); ++e) {
        T* dst = &out[segments[e] * w];
        const T* src = &V[e * w];
        for (std::size_t j = 0; j < w; ++j) dst[j] += src[j];
    }
    auto seg = std::make_shared<const IndexVector>(segments);
    const std::size_t iv = values.id();
    return tape.record(std::move(out), {iv},
                       [iv, seg, w](Tape<T>& t, std::size_t self) {
                           const Tensor<T>& g = t.grad_of(self);
                           Tensor<T>& gv = t.grad_accumulator(iv);
                           const IndexVector& segments = *seg;
                           for (std::size_t e = 0; e < segments.size(); ++e) {
                               const T* src = &g[segments[e] * w];
                               T* dst = &gv[e * w];
                               for (std::size_t j = 0; j < w; ++j) dst[j] += src[j];
                           }
                       },
                       "segment_sum");
}

template <typename T>
Var<T> segment_softmax(Var<T> logits, const IndexVector& segments, std::size_t n_segments, bool require_nonempty) {
    Tape<T>& tape = tape_of(logits);
    const Tensor<T>& L = logits.value();
    if (L.rank() == 0 || L.rank() > 2) {
        throw RankError("segment_softmax: expected [E] or [E x K], got " + shape_to_string(L.shape()));
    }
    if (L.rows() != segments.size()) {
        throw DimensionError("segment_softmax: " + std::to_string(L.rows()) + " rows but " +
                             std::to_string(segments.size()) + " segment ids");
    }
    std::vector<std::size_t> counts(n_segments, 0);
    for (std::uint32_t s : segments) {
        if (s >= n_segments) throw IndexError("segment_softmax: segment id " + std::to_string(s) +
                                              " out of range for " + std::to_string(n_segments) + " segments");
        ++counts[s];
    }
    if (require_nonempty) {
        for (std::size_t s = 0; s < n_segments; ++s)
            if (counts[s] == 0) {
                throw EmptyNeighborhoodError("segment_softmax: segment " + std::to_string(s) +
                                             " is empty; attention weights are undefined");
            }
    }
    const std::size_t k = L.row_width();
    std::vector<T> maxv(n_segments * k, -std::numeric_limits<T>::infinity());
    for (std::size_t e = 0; e < segments.size(); ++e)
        for (std::size_t h = 0; h < k; ++h) {
            T& m = maxv[segments[e] * k + h];
            m = std::max(m, L[e * k + h]);
        }
    Tensor<T> out(L.shape());
    std::vector<T> denom(n_segments * k, T{0});
    for (std::size_t e = 0; e < segments.size(); ++e)
        for (std::size_t h = 0; h < k; ++h) {
            const std::size_t s = segments[e] * k + h;
            out[e * k + h] = std::exp(L[e * k + h] - maxv[s]);
            denom[s] += out[e * k + h];
        }
    for (std::size_t e = 0; e < segments.size(); ++e)
        for (std::size_t h = 0; h < k; ++h) out[e * k + h] /= denom[segments[e] * k + h];

    auto seg = std::make_shared<const IndexVector>(segments);
    const std::size_t il = logits.id();
    return tape.record(std::move(out), {il},
                       [il, seg, k, n_segments](Tape<T>& t, std::size_t self) {
                           const Tensor<T>& g = t.grad_of(self);
                           const Tensor<T>& Y = t.value(self);
                           const IndexVector& segments = *seg;
                           // dL_e = y_e (g_e - sum_{e' in seg} g_e' y_e')
                           std::vector<T> dot(n_segments * k, T{0});
                           for (std::size_t e = 0; e < segments.size(); ++e)
                               for (std::size_t h = 0; h < k; ++h)
                                   dot[segments[e] * k + h] += g[e * k + h] * Y[e * k + h];
                           Tensor<T>& gl = t.grad_accumulator(il);
                           for (std::size_t e = 0; e < segments.size(); ++e)
                               for (std::size_t h = 0; h < k; ++h)
                                   gl[e * k + h] += Y[e * k + h] * (g[e * k + h] - dot[segments[e] * k + h]);
                       },
                       "segment_softmax");
}

template <typename T>
Var<T> scale_rows(Var<T> x, std::vector<T> weights) {
    Tape<T>& tape = tape_of(x);
    const Tensor<T>& X = x.value();
    if (X.rank() == 0) throw RankError("scale_rows: scalar input");
    if (weights.size() != X.rows()) {
        throw DimensionError("scale_rows: " + std::to_string(weights.size()) + " weights for " +
                             std::to_string(X.rows()) + " rows");
    }
    const std::size_t w = X.row_width();
    Tensor<T> out = X;
    for (std::size_t r = 0; r < weights.size(); ++r)
        for (std::size_t j = 0; j < w; ++j) out[r * w + j] *= weights[r];
    auto wts = std::make_shared<const std::vector<T>>(std::move(weights));
    const std::size_t ix = x.id();
    return tape.record(std::move(out), {ix},
                       [ix, wts, w](Tape<T>& t, std::size_t self) {
                           const Tensor<T>& g = t.grad_of(self);
                           Tensor<T>& gx = t.grad_accumulator(ix);
                           const std::vector<T>& weights = *wts;
                           for (std::size_t r = 0; r < weights.size(); ++r)
                               for (std::size_t j = 0; j < w; ++j) gx[r * w + j] += g[r * w + j] * weights[r];
                       },
                       "scale_rows");
}

template <typename T>
Var<T> head_dot(Var<T> x, Var<T> a) {
    Tape<T>& tape = tape_of(x, a);
    const Tensor<T>& X = x.value();
    const Tensor<T>& A = a.value();
    require_matrix("head_dot", X);
    require_matrix("head_dot", A);
    const std::size_t n = X.shape()[0], heads = A.shape()[0], d = A.shape()[1];
    if (X.shape()[1] != heads * d) {
        throw DimensionError("head_dot: " + shape_to_string(X.shape()) + " is not split into heads of " +
                             shape_to_string(A.shape()));
    }
    Tensor<T> out({n, heads});
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t h = 0; h < heads; ++h) {
            T acc{0};
            for (std::size_t j = 0; j < d; ++j) acc += X[r * heads * d + h * d + j] * A[h * d + j];
            out[r * heads + h] = acc;
        }
    const std::size_t ix = x.id(), ia = a.id();
    return tape.record(std::move(out), {ix, ia},
                       [ix, ia, n, heads, d](Tape<T>& t, std::size_t self) {
                           const Tensor<T>& g = t.grad_of(self);
                           const Tensor<T>& X = t.value(ix);
                           const Tensor<T>& A = t.value(ia);
                           const std::size_t c = heads * d;
                           if (t.needs_grad(ix)) {
                               Tensor<T>& gx = t.grad_accumulator(ix);
                               for (std::size_t r = 0; r < n; ++r)
                                   for (std::size_t h = 0; h < heads; ++h) {
                                       const T gv = g[r * heads + h];
                                       for (std::size_t j = 0; j < d; ++j) gx[r * c + h * d + j] += gv * A[h * d + j];
                                   }
                           }
                           if (t.needs_grad(ia)) {
                               Tensor<T>& ga = t.grad_accumulator(ia);
                               for (std::size_t r = 0; r < n; ++r)
                                   for (std::size_t h = 0; h < heads; ++h) {
                                       const T gv = g[r * heads + h];
                                       for (std::size_t j = 0; j < d; ++j) ga[h * d + j] += gv * X[r * c + h * d + j];
                                   }
                           }
                       },
                       "head_dot");
}

template <typename T>
Var<T> mul_heads(Var<T> weights, Var<T> values) {
    Tape<T>& tape = tape_of(weights, values);
    const Tensor<T>& W = weights.value();
    const Tensor<T>& V = values.value();
    require_matrix("mul_heads", W);
    require_matrix("mul_heads", V);
    const std::size_t e = W.shape()[0], heads = W.shape()[1];
    if (V.shape()[0] != e || heads == 0 || V.shape()[1] % heads != 0) {
        throw DimensionError("mul_heads: weights " + shape_to_string(W.shape()) + " do not split values " +
                             shape_to_string(V.shape()));
    }
    const std::size_t c = V.shape()[1], d = c / heads;
    Tensor<T> out(V.shape());
    for (std::size_t r = 0; r < e; ++r)
        for (std::size_t h = 0; h < heads; ++h) {
            const T wv = W[r * heads + h];
            for (std::size_t j = 0; j < d; ++j) out[r * c + h * d + j] = wv * V[r * c + h * d + j];
        }
    const std::size_t iw = weights.id(), iv = values.id();
    return tape.record(std::move(out), {iw, iv},
                       [iw, iv, e, heads, c, d](Tape<T>& t, std::size_t self) {
                           const Tensor<T>& g = t.grad_of(self);
                           const Tensor<T>& W = t.value(iw);
                           const Tensor<T>& V = t.value(iv);
                           if (t.needs_grad(iw)) {
                               Tensor<T>& gw = t.grad_accumulator(iw);
                               for (std::size_t r = 0; r < e; ++r)
                                   for (std::size_t h = 0; h < heads; ++h) {
                                       T acc{0};
                                       for (std::size_t j = 0; j < d; ++j) acc += g[r * c + h * d + j] * V[r * c + h * d + j];
                                       gw[r * heads + h] += acc;
                                   }
                           }
                           if (t.needs_grad(iv)) {
                               Tensor<T>& gv = t.grad_accumulator(iv);
                               for (std::size_t r = 0; r < e; ++r)
                                   for (std::size_t h = 0; h < heads; ++h) {
                                       const T wv = W[r * heads + h];
                                       for (std::size_t j = 0; j < d; ++j) gv[r * c + h * d + j] += wv * g[r * c + h * d + j];
                                   }
                           }
                       },
                       "mul_heads");
}

template <typename T>
Var<T> sum(Var<T> x) {
    Tape<T>& tape = tape_of(x);
    T acc{0};
    for (T v : x.value().data()) acc += v;
    const std::size_t ix = x.id();
    return tape.record(Tensor<T>::scalar(acc), {ix},
                       [ix](Tape<T>& t, std::size_t self) {
                           const T g = t.grad_of(self)[0];
                           Tensor<T>& gx = t.grad_accumulator(ix);
                           for (auto& v : gx.storage()) v += g;
                       },
                       "sum");
}

template <typename T>
Var<T> mean(Var<T> x) {
    const std::size_t n = x.value().size();
    if (n == 0) throw DimensionError("mean: empty tensor");
    return scale(sum(x), 1.0 / static_cast<double>(n));
}

#define FOG_INSTANTIATE_OPS(T)                                                                  \
    template Var<T> matmul(Var<T>, Var<T>);                                                     \
    template Var<T> matmul_transposed(Var<T>, Var<T>);                                          \
    template Var<T> add(Var<T>, Var<T>);                                                        \
    template Var<T> sub(Var<T>, Var<T>);                                                        \
    template Var<T> mul(Var<T>, Var<T>);                                                        \
    template Var<T> div(Var<T>, Var<T>);                                                        \
    template Var<T> scale(Var<T>, double);                                                      \
    template Var<T> add_scalar(Var<T>, double);                                                 \
    template Var<T> scale_by(Var<T>, Var<T>);                                                   \
    template Var<T> add_bias(Var<T>, Var<T>);                                                   \
    template Var<T> activation(Var<T>, Activation);                                             \
    template Var<T> concat(Var<T>, Var<T>);                                                     \
    template Var<T> slice_channels(Var<T>, std::size_t, std::size_t);                          \
    template Var<T> reshape(Var<T>, Shape);                                                     \
    template Var<T> kron(Var<T>, Var<T>);                                                       \
    template Var<T> rowwise_kron(Var<T>, Var<T>);                                               \
    template Var<T> gather_rows(Var<T>, const IndexVector&);                                    \
    template Var<T> segment_sum(Var<T>, const IndexVector&, std::size_t);                       \
    template Var<T> segment_softmax(Var<T>, const IndexVector&, std::size_t, bool);             \
    template Var<T> scale_rows(Var<T>, std::vector<T>);                                         \
    template Var<T> head_dot(Var<T>, Var<T>);                                                   \
    template Var<T> mul_heads(Var<T>, Var<T>);                                                  \
    template Var<T> sum(Var<T>);                                                                \
    template Var<T> mean(Var<T>);

FOG_INSTANTIATE_OPS(float)
FOG_INSTANTIATE_OPS(double)

}  // namespace fog
