// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0

#include "jedssl/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>

#include "jedssl/kernels.hpp"

namespace jedssl::ad {

namespace {

template <class T>
bool all_finite(std::span<const T> v) {
    return std::all_of(v.begin(), v.end(), [](T x) { return std::isfinite(x); });
}

// Wraps a computed value into a node, wiring the backward rule only when some
// input participates in differentiation.
template <class T>
Tensor<T> make_result(std::string_view op, Shape shape, std::vector<T> value, std::vector<Tensor<T>> inputs,
                      std::function<void(Node<T>&)> backward) {
    if (!all_finite<T>(value)) {
        bool inputs_finite = std::all_of(inputs.begin(), inputs.end(),
                                         [](const Tensor<T>& t) { return all_finite<T>(t.data()); });
        if (inputs_finite) {
            throw NumericalError(std::string(op) + ": non-finite output from finite inputs (overflow)");
        }
    }
    auto node = std::make_shared<Node<T>>();
    node->shape = std::move(shape);
    node->value = std::move(value);
    node->op = op;
    bool track = grad_enabled() &&
                 std::any_of(inputs.begin(), inputs.end(), [](const Tensor<T>& t) { return t.requires_grad(); });
    if (track) {
        node->requires_grad = true;
        for (auto& t : inputs) node->inputs.push_back(t.node_ptr());
        node->backward = std::move(backward);
    }
    return Tensor<T>(std::move(node));
}

[[noreturn]] void shape_error(std::string_view op, const std::string& what) {
    throw ShapeError(std::string(op) + ": " + what);
}

template <class T>
void require_rank(std::string_view op, const Tensor<T>& x, std::size_t rank) {
    if (x.rank() != rank) {
        shape_error(op, "expected rank " + std::to_string(rank) + ", got shape " + to_string(x.shape()));
    }
}

template <class T>
void require_same_shape(std::string_view op, const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape() != b.shape()) {
        shape_error(op, "shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
    }
}

// Only accumulate into inputs that are tracked.
template <class T>
T* grad_of(Node<T>& self, std::size_t i) {
    auto& in = *self.inputs[i];
    return in.requires_grad ? in.grad_buffer().data() : nullptr;
}

std::size_t last_dim(const Shape& s) { return s.back(); }

}  // namespace

template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    require_rank("matmul", a, 2);
    require_rank("matmul", b, 2);
    if (a.dim(1) != b.dim(0)) {
        shape_error("matmul", "inner dimensions differ: " + to_string(a.shape()) + " x " + to_string(b.shape()));
    }
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    std::vector<T> out(m * n);
    kernels::gemm<T>(kernels::Trans::kNo, kernels::Trans::kNo, {m, k, n}, a.data().data(), b.data().data(),
                     out.data(), false);
    return make_result<T>("matmul", {m, n}, std::move(out), {a, b}, [m, k, n](Node<T>& self) {
        const T* g = self.grad.data();
        const auto& av = self.inputs[0]->value;
        const auto& bv = self.inputs[1]->value;
        if (T* ga = grad_of(self, 0)) {
            kernels::gemm<T>(kernels::Trans::kNo, kernels::Trans::kYes, {m, n, k}, g, bv.data(), ga, true);
        }
        if (T* gb = grad_of(self, 1)) {
            kernels::gemm<T>(kernels::Trans::kYes, kernels::Trans::kNo, {k, m, n}, av.data(), g, gb, true);
        }
    });
}

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    require_same_shape("add", a, b);
    std::vector<T> out(a.numel());
    auto av = a.data(), bv = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
    return make_result<T>("add", a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
        for (std::size_t k = 0; k < 2; ++k) {
            if (T* g = grad_of(self, k)) {
                for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
            }
        }
    });
}

template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    require_same_shape("sub", a, b);
    std::vector<T> out(a.numel());
    auto av = a.data(), bv = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
    return make_result<T>("sub", a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
        if (T* g = grad_of(self, 0)) {
            for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
        }
        if (T* g = grad_of(self, 1)) {
            for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] -= self.grad[i];
        }
    });
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    require_same_shape("mul", a, b);
    std::vector<T> out(a.numel());
    auto av = a.data(), bv = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
    return make_result<T>("mul", a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
        const auto& av = self.inputs[0]->value;
        const auto& bv = self.inputs[1]->value;
        if (T* g = grad_of(self, 0)) {
            for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * bv[i];
        }
        if (T* g = grad_of(self, 1)) {
            for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * av[i];
        }
    });
}

template <class T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
    std::vector<T> out(x.data().begin(), x.data().end());
    for (auto& v : out) v *= factor;
    return make_result<T>("scale", x.shape(), std::move(out), {x}, [factor](Node<T>& self) {
        if (T* g = grad_of(self, 0)) {
            for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * factor;
        }
    });
}

template <class T>
Tensor<T> add_row(const Tensor<T>& x, const Tensor<T>& row) {
    const std::size_t n = last_dim(x.shape());
    if (row.numel() != n) {
        shape_error("add_row", "row " + to_string(row.shape()) + " does not match last axis of " +
                                   to_string(x.shape()));
    }
    const std::size_t rows = x.numel() / n;
    std::vector<T> out(x.numel());
    auto xv = x.data(), rv = row.data();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < n; ++j) out[r * n + j] = xv[r * n + j] + rv[j];
    }
    return make_result<T>("add_row", x.shape(), std::move(out), {x, row}, [rows, n](Node<T>& self) {
        if (T* g = grad_of(self, 0)) {
            for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
        }
        if (T* g = grad_of(self, 1)) {
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t j = 0; j < n; ++j) g[j] += self.grad[r * n + j];
            }
        }
    });
}

template <class T>
Tensor<T> transpose(const Tensor<T>& x) {
    require_rank("transpose", x, 2);
    const std::size_t r = x.dim(0), c = x.dim(1);
    std::vector<T> out(x.numel());
    auto xv = x.data();
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) out[j * r + i] = xv[i * c + j];
    }
    return make_result<T>("transpose", {c, r}, std::move(out), {x}, [r, c](Node<T>& self) {
        if (T* g = grad_of(self, 0)) {
            for (std::size_t i = 0; i < r; ++i) {
                for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[j * r + i];
            }
        }
    });
}

template <class T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
    if (numel(shape) != x.numel() || shape.empty()) {
        shape_error("reshape", "cannot view " + to_string(x.shape()) + " as " + to_string(shape));
    }
    std::vector<T> out(x.data().begin(), x.data().end());
    return make_result<T>("reshape", std::move(shape), std::move(out), {x}, [](Node<T>& self) {
        if (T* g = grad_of(self, 0)) {
            for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
        }
    });
}

template <class T>
Tensor<T> softmax(const Tensor<T>& x) {
    const std::size_t n = last_dim(x.shape());
    const std::size_t rows = x.numel() / n;
    std::vector<T> out(x.numel());
    auto xv = x.data();
    for (std::size_t r = 0; r < rows; ++r) {
        const T* in = xv.data() + r * n;
        T* o = out.data() + r * n;
        const T mx = *std::max_element(in, in + n);
        T z = 0;
        for (std::size_t j = 0; j < n; ++j) {
            o[j] = std::exp(in[j] - mx);
            z += o[j];
        }
        for (std::size_t j = 0; j < n; ++j) o[j] /= z;
    }
    return make_result<T>("softmax", x.shape(), std::move(out), {x}, [rows, n](Node<T>& self) {
        T* g = grad_of(self, 0);
        if (!g) return;
        for (std::size_t r = 0; r < rows; ++r) {
            const T* y = self.value.data() + r * n;
            const T* go = self.grad.data() + r * n;
            T dot = 0;
            for (std::size_t j = 0; j < n; ++j) dot += go[j] * y[j];
            for (std::size_t j = 0; j < n; ++j) g[r * n + j] += y[j] * (go[j] - dot);
        }
    });
}

template <class T>
Tensor<T> log_softmax(const Tensor<T>& x) {
    const std::size_t n = last_dim(x.shape());
    const std::size_t rows = x.numel() / n;
    std::vector<T> out(x.numel());
    auto xv = x.data();
    for (std::size_t r = 0; r < rows; ++r) {
        const T* in = xv.data() + r * n;
        T* o = out.data() + r * n;
        const T mx = *std::max_element(in, in + n);
        T z = 0;
        for (std::size_t j = 0; j < n; ++j) z += std::exp(in[j] - mx);
        const T lse = mx + std::log(z);
        for (std::size_t j = 0; j < n; ++j) o[j] = in[j] - lse;
    }
    return make_result<T>("log_softmax", x.shape(), std::move(out), {x}, [rows, n](Node<T>& self) {
        T* g = grad_of(self, 0);
        if (!g) return;
        for (std::size_t r = 0; r < rows; ++r) {
            const T* y = self.value.data() + r * n;
            const T* go = self.grad.data() + r * n;
            T total = 0;
            for (std::size_t j = 0; j < n; ++j) total += go[j];
            for (std::size_t j = 0; j < n; ++j) g[r * n + j] += go[j] - std::exp(y[j]) * total;
        }
    });
}

template <class T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, double eps) {
    const std::size_t n = last_dim(x.shape());
    if (gain.numel() != n || bias.numel() != n) {
        shape_error("layer_norm", "gain " + to_string(gain.shape()) + " / bias " + to_string(bias.shape()) +
                                      " do not match last axis of " + to_string(x.shape()));
    }
    const std::size_t rows = x.numel() / n;
    std::vector<T> out(x.numel());
    // Saved for backward: normalized input and reciprocal std per row.
    auto xhat = std::make_shared<std::vector<T>>(x.numel());
    auto rstd = std::make_shared<std::vector<T>>(rows);
    auto xv = x.data(), gv = gain.data(), bv = bias.data();
    for (std::size_t r = 0; r < rows; ++r) {
        const T* in = xv.data() + r * n;
        T mu = 0;
        for (std::size_t j = 0; j < n; ++j) mu += in[j];
        mu /= static_cast<T>(n);
        T var = 0;
        for (std::size_t j = 0; j < n; ++j) var += (in[j] - mu) * (in[j] - mu);
        var /= static_cast<T>(n);
        const T rs = T(1) / std::sqrt(var + static_cast<T>(eps));
        (*rstd)[r] = rs;
        for (std::size_t j = 0; j < n; ++j) {
            const T h = (in[j] - mu) * rs;
            (*xhat)[r * n + j] = h;
            out[r * n + j] = h * gv[j] + bv[j];
        }
    }
    return make_result<T>(
        "layer_norm", x.shape(), std::move(out), {x, gain, bias}, [rows, n, xhat, rstd](Node<T>& self) {
            const auto& gv = self.inputs[1]->value;
            const T* go = self.grad.data();
            if (T* gx = grad_of(self, 0)) {
                std::vector<T> dh(n);
                for (std::size_t r = 0; r < rows; ++r) {
                    T mean_dh = 0, mean_dh_h = 0;
                    for (std::size_t j = 0; j < n; ++j) {
                        dh[j] = go[r * n + j] * gv[j];
                        mean_dh += dh[j];
                        mean_dh_h += dh[j] * (*xhat)[r * n + j];
                    }
                    mean_dh /= static_cast<T>(n);
                    mean_dh_h /= static_cast<T>(n);
                    for (std::size_t j = 0; j < n; ++j) {
                        gx[r * n + j] += (*rstd)[r] * (dh[j] - mean_dh - (*xhat)[r * n + j] * mean_dh_h);
                    }
                }
            }
            if (T* gg = grad_of(self, 1)) {
                for (std::size_t r = 0; r < rows; ++r) {
                    for (std::size_t j = 0; j < n; ++j) gg[j] += go[r * n + j] * (*xhat)[r * n + j];
                }
            }
            if (T* gb = grad_of(self, 2)) {
                for (std::size_t r = 0; r < rows; ++r) {
                    for (std::size_t j = 0; j < n; ++j) gb[j] += go[r * n + j];
                }
            }
        });
}

template <class T>
Tensor<T> gelu(const Tensor<T>& x) {
    const T inv_sqrt2 = static_cast<T>(1.0 / std::numbers::sqrt2);
    std::vector<T> out(x.numel());
    auto xv = x.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = T(0.5) * xv[i] * (T(1) + std::erf(xv[i] * inv_sqrt2));
    return make_result<T>("gelu", x.shape(), std::move(out), {x}, [inv_sqrt2](Node<T>& self) {
        T* g = grad_of(self, 0);
        if (!g) return;
        const T inv_sqrt_2pi = static_cast<T>(0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
        const auto& xv = self.inputs[0]->value;
        for (std::size_t i = 0; i < xv.size(); ++i) {
            const T v = xv[i];
            const T cdf = T(0.5) * (T(1) + std::erf(v * inv_sqrt2));
            const T pdf = inv_sqrt_2pi * std::exp(T(-0.5) * v * v);
            g[i] += self.grad[i] * (cdf + v * pdf);
        }
    });
}

template <class T>
Tensor<T> embedding(const Tensor<T>& table, std::span<const std::int32_t> ids) {
    require_rank("embedding", table, 2);
    const std::size_t vocab = table.dim(0), d = table.dim(1);
    if (ids.empty()) shape_error("embedding", "empty id list");
    std::vector<std::int32_t> saved(ids.begin(), ids.end());
    std::vector<T> out(ids.size() * d);
    auto tv = table.data();
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab) {
            throw std::out_of_range("embedding: id " + std::to_string(ids[i]) + " outside table of " +
                                    std::to_string(vocab) + " rows");
        }
        std::copy_n(tv.data() + static_cast<std::size_t>(ids[i]) * d, d, out.data() + i * d);
    }
    return make_result<T>("embedding", {ids.size(), d}, std::move(out), {table},
                          [d, saved = std::move(saved)](Node<T>& self) {
                              T* g = grad_of(self, 0);
                              if (!g) return;
                              for (std::size_t i = 0; i < saved.size(); ++i) {
                                  T* row = g + static_cast<std::size_t>(saved[i]) * d;
                                  for (std::size_t j = 0; j < d; ++j) row[j] += self.grad[i * d + j];
                              }
                          });
}

template <class T>
Tensor<T> concat(std::span<const Tensor<T>> parts, std::size_t axis) {
    if (parts.empty()) shape_error("concat", "no inputs");
    std::vector<Tensor<T>> inputs(parts.begin(), parts.end());
    if (axis == 0) {
        Shape tail(parts[0].shape().begin() + 1, parts[0].shape().end());
        std::size_t lead = 0;
        for (const auto& p : parts) {
            Shape t(p.shape().begin() + 1, p.shape().end());
            if (t != tail) {
                shape_error("concat", "trailing shape " + to_string(p.shape()) + " incompatible with " +
                                          to_string(parts[0].shape()));
            }
            lead += p.dim(0);
        }
        Shape shape = parts[0].shape();
        shape[0] = lead;
        std::vector<T> out;
        out.reserve(numel(shape));
        std::vector<std::size_t> sizes;
        for (const auto& p : parts) {
            out.insert(out.end(), p.data().begin(), p.data().end());
            sizes.push_back(p.numel());
        }
        return make_result<T>("concat", std::move(shape), std::move(out), std::move(inputs),
                              [sizes = std::move(sizes)](Node<T>& self) {
                                  std::size_t off = 0;
                                  for (std::size_t k = 0; k < sizes.size(); ++k) {
                                      if (T* g = grad_of(self, k)) {
                                          for (std::size_t i = 0; i < sizes[k]; ++i) g[i] += self.grad[off + i];
                                      }
                                      off += sizes[k];
                                  }
                              });
    }
    if (axis != 1) shape_error("concat", "axis " + std::to_string(axis) + " not supported");
    const std::size_t rows = parts[0].dim(0);
    std::vector<std::size_t> widths;
    std::size_t total = 0;
    for (const auto& p : parts) {
        if (p.rank() != 2 || p.dim(0) != rows) {
            shape_error("concat", "column concat needs 2-D inputs with equal rows, got " + to_string(p.shape()) +
                                      " and " + to_string(parts[0].shape()));
        }
        widths.push_back(p.dim(1));
        total += p.dim(1);
    }
    std::vector<T> out(rows * total);
    std::size_t col = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        auto pv = parts[k].data();
        for (std::size_t r = 0; r < rows; ++r) {
            std::copy_n(pv.data() + r * widths[k], widths[k], out.data() + r * total + col);
        }
        col += widths[k];
    }
    return make_result<T>("concat", {rows, total}, std::move(out), std::move(inputs),
                          [rows, total, widths = std::move(widths)](Node<T>& self) {
                              std::size_t col = 0;
                              for (std::size_t k = 0; k < widths.size(); ++k) {
                                  if (T* g = grad_of(self, k)) {
                                      for (std::size_t r = 0; r < rows; ++r) {
                                          for (std::size_t j = 0; j < widths[k]; ++j) {
                                              g[r * widths[k] + j] += self.grad[r * total + col + j];
                                          }
                                      }
                                  }
                                  col += widths[k];
                              }
                          });
}

template <class T>
Tensor<T> slice(const Tensor<T>& x, std::size_t axis, std::size_t begin, std::size_t end) {
    if (axis >= x.rank() || (axis == 1 && x.rank() != 2) || axis > 1) {
        shape_error("slice", "axis " + std::to_string(axis) + " not supported for shape " + to_string(x.shape()));
    }
    if (begin >= end || end > x.dim(axis)) {
        shape_error("slice", "range [" + std::to_string(begin) + ", " + std::to_string(end) + ") invalid for axis " +
                                 std::to_string(axis) + " of " + to_string(x.shape()));
    }
    Shape shape = x.shape();
    shape[axis] = end - begin;
    auto xv = x.data();
    if (axis == 0) {
        const std::size_t inner = x.numel() / x.dim(0);
        std::vector<T> out(xv.begin() + begin * inner, xv.begin() + end * inner);
        return make_result<T>("slice", std::move(shape), std::move(out), {x}, [begin, inner](Node<T>& self) {
            if (T* g = grad_of(self, 0)) {
                for (std::size_t i = 0; i < self.grad.size(); ++i) g[begin * inner + i] += self.grad[i];
            }
        });
    }
    const std::size_t rows = x.dim(0), cols = x.dim(1), w = end - begin;
    std::vector<T> out(rows * w);
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(xv.data() + r * cols + begin, w, out.data() + r * w);
    return make_result<T>("slice", std::move(shape), std::move(out), {x}, [rows, cols, w, begin](Node<T>& self) {
        if (T* g = grad_of(self, 0)) {
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t j = 0; j < w; ++j) g[r * cols + begin + j] += self.grad[r * w + j];
            }
        }
    });
}

template <class T>
Tensor<T> sum(const Tensor<T>& x) {
    T acc = 0;
    for (T v : x.data()) acc += v;
    return make_result<T>("sum", {1}, {acc}, {x}, [](Node<T>& self) {
        if (T* g = grad_of(self, 0)) {
            const std::size_t n = self.inputs[0]->value.size();
            for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[0];
        }
    });
}

template <class T>
Tensor<T> mean(const Tensor<T>& x) {
    T acc = 0;
    for (T v : x.data()) acc += v;
    const T n = static_cast<T>(x.numel());
    return make_result<T>("mean", {1}, {acc / n}, {x}, [n](Node<T>& self) {
        if (T* g = grad_of(self, 0)) {
            const T share = self.grad[0] / n;
            const std::size_t count = self.inputs[0]->value.size();
            for (std::size_t i = 0; i < count; ++i) g[i] += share;
        }
    });
}

template <class T>
Tensor<T> pick(const Tensor<T>& x, std::span<const std::int32_t> index) {
    require_rank("pick", x, 2);
    const std::size_t rows = x.dim(0), v = x.dim(1);
    if (index.size() != rows) {
        shape_error("pick", std::to_string(index.size()) + " indices for " + to_string(x.shape()));
    }
    std::vector<std::int32_t> saved(index.begin(), index.end());
    std::vector<T> out(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        if (index[r] < 0 || static_cast<std::size_t>(index[r]) >= v) {
            throw std::out_of_range("pick: index " + std::to_string(index[r]) + " outside " + std::to_string(v) +
                                    " columns");
        }
        out[r] = x.data()[r * v + static_cast<std::size_t>(index[r])];
    }
    return make_result<T>("pick", {rows}, std::move(out), {x}, [v, saved = std::move(saved)](Node<T>& self) {
        if (T* g = grad_of(self, 0)) {
            for (std::size_t r = 0; r < saved.size(); ++r) g[r * v + static_cast<std::size_t>(saved[r])] += self.grad[r];
        }
    });
}

template <class T>
Tensor<T> unfold_frames(const Tensor<T>& x, std::size_t kernel, std::size_t stride) {
    require_rank("unfold_frames", x, 2);
    if (kernel == 0 || stride == 0) shape_error("unfold_frames", "kernel and stride must be positive");
    const std::size_t len = x.dim(0), ch = x.dim(1);
    if (len < kernel) {
        shape_error("unfold_frames", "input of " + std::to_string(len) + " steps shorter than kernel " +
                                         std::to_string(kernel));
    }
    const std::size_t frames = (len - kernel) / stride + 1;
    const std::size_t width = kernel * ch;
    std::vector<T> out(frames * width);
    auto xv = x.data();
    for (std::size_t t = 0; t < frames; ++t) std::copy_n(xv.data() + t * stride * ch, width, out.data() + t * width);
    return make_result<T>("unfold_frames", {frames, width}, std::move(out), {x},
                          [frames, width, stride, ch](Node<T>& self) {
                              T* g = grad_of(self, 0);
                              if (!g) return;
                              for (std::size_t t = 0; t < frames; ++t) {
                                  T* dst = g + t * stride * ch;
                                  const T* src = self.grad.data() + t * width;
                                  for (std::size_t j = 0; j < width; ++j) dst[j] += src[j];
                              }
                          });
}

template <class T>
Tensor<T> replace_rows(const Tensor<T>& x, const std::vector<bool>& mask, const Tensor<T>& row) {
    require_rank("replace_rows", x, 2);
    const std::size_t rows = x.dim(0), d = x.dim(1);
    if (mask.size() != rows) {
        shape_error("replace_rows", "mask of length " + std::to_string(mask.size()) + " for " + to_string(x.shape()));
    }
    if (row.numel() != d) {
        shape_error("replace_rows", "row " + to_string(row.shape()) + " does not match width of " + to_string(x.shape()));
    }
    std::vector<T> out(x.data().begin(), x.data().end());
    auto rv = row.data();
    for (std::size_t r = 0; r < rows; ++r) {
        if (mask[r]) std::copy_n(rv.data(), d, out.data() + r * d);
    }
    return make_result<T>("replace_rows", x.shape(), std::move(out), {x, row}, [rows, d, mask](Node<T>& self) {
        T* gx = grad_of(self, 0);
        T* gr = grad_of(self, 1);
        for (std::size_t r = 0; r < rows; ++r) {
            const T* src = self.grad.data() + r * d;
            if (mask[r]) {
                if (gr) {
                    for (std::size_t j = 0; j < d; ++j) gr[j] += src[j];
                }
            } else if (gx) {
                for (std::size_t j = 0; j < d; ++j) gx[r * d + j] += src[j];
            }
        }
    });
}

template <class T>
Tensor<T> dropout(const Tensor<T>& x, double p, std::mt19937_64& rng) {
    if (p <= 0.0) return x;
    if (p >= 1.0) throw std::invalid_argument("dropout: p must be < 1");
    std::bernoulli_distribution keep(1.0 - p);
    const T kept = static_cast<T>(1.0 / (1.0 - p));
    std::vector<T> factor(x.numel());
    for (auto& f : factor) f = keep(rng) ? kept : T(0);
    return mul(x, Tensor<T>::from(x.shape(), std::move(factor)));
}

#define JEDSSL_INSTANTIATE_OPS(T)                                                                       \
    template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                      \
    template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                         \
    template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                         \
    template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                         \
    template Tensor<T> scale(const Tensor<T>&, T);                                                      \
    template Tensor<T> add_row(const Tensor<T>&, const Tensor<T>&);                                     \
    template Tensor<T> transpose(const Tensor<T>&);                                                     \
    template Tensor<T> reshape(const Tensor<T>&, Shape);                                                \
    template Tensor<T> softmax(const Tensor<T>&);                                                       \
    template Tensor<T> log_softmax(const Tensor<T>&);                                                   \
    template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, double);        \
    template Tensor<T> gelu(const Tensor<T>&);                                                          \
    template Tensor<T> embedding(const Tensor<T>&, std::span<const std::int32_t>);                      \
    template Tensor<T> concat(std::span<const Tensor<T>>, std::size_t);                                 \
    template Tensor<T> slice(const Tensor<T>&, std::size_t, std::size_t, std::size_t);                  \
    template Tensor<T> sum(const Tensor<T>&);                                                           \
    template Tensor<T> mean(const Tensor<T>&);                                                          \
    template Tensor<T> pick(const Tensor<T>&, std::span<const std::int32_t>);                           \
    template Tensor<T> unfold_frames(const Tensor<T>&, std::size_t, std::size_t);                       \
    template Tensor<T> replace_rows(const Tensor<T>&, const std::vector<bool>&, const Tensor<T>&);      \
    template Tensor<T> dropout(const Tensor<T>&, double, std::mt19937_64&);

JEDSSL_INSTANTIATE_OPS(float)
JEDSSL_INSTANTIATE_OPS(double)

#undef JEDSSL_INSTANTIATE_OPS

}  // namespace jedssl::ad
