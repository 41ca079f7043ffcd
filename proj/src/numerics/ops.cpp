#include "tm2d/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tm2d/common/errors.hpp"

namespace tm2d::num {

namespace {

using detail::Node;

double* grad_of(Node& n) {
    if (!n.requires_grad) {
        return nullptr;
    }
    n.ensure_grad();
    return n.grad.data();
}

Node& parent(Node& self, std::size_t i) { return *self.parents[i]; }

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    }
}

void require_matrix(const Tensor& a, const char* op) {
    if (a.rank() > 2) {
        throw ShapeError(std::string(op) + ": expected a matrix, got " + shape_str(a.shape()));
    }
}

}  // namespace

bool all_finite(std::span<const double> values) {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_matrix(a, "matmul");
    require_matrix(b, "matmul");
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    if (b.rows() != k) {
        throw ShapeError("matmul: inner dimensions disagree, " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
    }
    std::vector<double> c(m * n, 0.0);
    const double* A = a.data().data();
    const double* B = b.data().data();
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = A[i * k + p];
            if (av == 0.0) {
                continue;
            }
            const double* brow = B + p * n;
            for (std::size_t j = 0; j < n; ++j) {
                crow[j] += av * brow[j];
            }
        }
    }
    return detail::make_result({m, n}, std::move(c), {a, b}, "matmul", [m, k, n](Node& self) {
        Node& na = parent(self, 0);
        Node& nb = parent(self, 1);
        const double* G = self.grad.data();
        const double* A = na.value.data();
        const double* B = nb.value.data();
        if (double* dA = grad_of(na)) {
            for (std::size_t i = 0; i < m; ++i) {
                const double* grow = G + i * n;
                for (std::size_t p = 0; p < k; ++p) {
                    const double* brow = B + p * n;
                    double s = 0.0;
                    for (std::size_t j = 0; j < n; ++j) {
                        s += grow[j] * brow[j];
                    }
                    dA[i * k + p] += s;
                }
            }
        }
        if (double* dB = grad_of(nb)) {
            for (std::size_t i = 0; i < m; ++i) {
                const double* grow = G + i * n;
                for (std::size_t p = 0; p < k; ++p) {
                    const double av = A[i * k + p];
                    double* drow = dB + p * n;
                    for (std::size_t j = 0; j < n; ++j) {
                        drow[j] += av * grow[j];
                    }
                }
            }
        }
    });
}

Tensor transpose(const Tensor& a) {
    require_matrix(a, "transpose");
    const std::size_t m = a.rows(), n = a.cols();
    std::vector<double> out(m * n);
    const auto x = a.data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            out[j * m + i] = x[i * n + j];
        }
    }
    return detail::make_result({n, m}, std::move(out), {a}, "transpose", [m, n](Node& self) {
        if (double* d = grad_of(parent(self, 0))) {
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    d[i * n + j] += self.grad[j * m + i];
                }
            }
        }
    });
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    std::vector<double> out(a.data().begin(), a.data().end());
    const auto y = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] += y[i];
    }
    return detail::make_result(a.shape(), std::move(out), {a, b}, "add", [](Node& self) {
        for (std::size_t p = 0; p < 2; ++p) {
            if (double* d = grad_of(parent(self, p))) {
                for (std::size_t i = 0; i < self.grad.size(); ++i) {
                    d[i] += self.grad[i];
                }
            }
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    std::vector<double> out(a.data().begin(), a.data().end());
    const auto y = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] -= y[i];
    }
    return detail::make_result(a.shape(), std::move(out), {a, b}, "sub", [](Node& self) {
        if (double* d = grad_of(parent(self, 0))) {
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                d[i] += self.grad[i];
            }
        }
        if (double* d = grad_of(parent(self, 1))) {
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                d[i] -= self.grad[i];
            }
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    std::vector<double> out(a.numel());
    const auto x = a.data();
    const auto y = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = x[i] * y[i];
    }
    return detail::make_result(a.shape(), std::move(out), {a, b}, "mul", [](Node& self) {
        Node& na = parent(self, 0);
        Node& nb = parent(self, 1);
        if (double* d = grad_of(na)) {
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                d[i] += self.grad[i] * nb.value[i];
            }
        }
        if (double* d = grad_of(nb)) {
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                d[i] += self.grad[i] * na.value[i];
            }
        }
    });
}

Tensor scale(const Tensor& a, double s) {
    std::vector<double> out(a.data().begin(), a.data().end());
    for (double& v : out) {
        v *= s;
    }
    return detail::make_result(a.shape(), std::move(out), {a}, "scale", [s](Node& self) {
        if (double* d = grad_of(parent(self, 0))) {
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                d[i] += s * self.grad[i];
            }
        }
    });
}

Tensor add_bias(const Tensor& a, const Tensor& bias) {
    require_matrix(a, "add_bias");
    const std::size_t m = a.rows(), n = a.cols();
    if (bias.numel() != n) {
        throw ShapeError("add_bias: bias " + shape_str(bias.shape()) + " does not match " + shape_str(a.shape()));
    }
    std::vector<double> out(a.data().begin(), a.data().end());
    const auto b = bias.data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            out[i * n + j] += b[j];
        }
    }
    return detail::make_result(a.shape(), std::move(out), {a, bias}, "add_bias", [m, n](Node& self) {
        if (double* d = grad_of(parent(self, 0))) {
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                d[i] += self.grad[i];
            }
        }
        if (double* d = grad_of(parent(self, 1))) {
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    d[j] += self.grad[i * n + j];
                }
            }
        }
    });
}

Tensor relu(const Tensor& a) {
    std::vector<double> out(a.data().begin(), a.data().end());
    for (double& v : out) {
        v = v > 0.0 ? v : 0.0;
    }
    return detail::make_result(a.shape(), std::move(out), {a}, "relu", [](Node& self) {
        Node& na = parent(self, 0);
        if (double* d = grad_of(na)) {
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                if (na.value[i] > 0.0) {
                    d[i] += self.grad[i];
                }
            }
        }
    });
}

Tensor masked_softmax_rows(const Tensor& a, std::span<const std::uint8_t> allowed) {
    require_matrix(a, "softmax_rows");
    const std::size_t m = a.rows(), n = a.cols();
    if (!allowed.empty() && allowed.size() != m * n) {
        throw ShapeError("softmax_rows: mask has " + std::to_string(allowed.size()) + " entries for " +
                         shape_str(a.shape()));
    }
    const auto x = a.data();
    std::vector<double> out(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (allowed.empty() || allowed[i * n + j]) {
                mx = std::max(mx, x[i * n + j]);
            }
        }
        if (mx == -std::numeric_limits<double>::infinity()) {
            continue;  // empty key set: row stays zero
        }
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (allowed.empty() || allowed[i * n + j]) {
                out[i * n + j] = std::exp(x[i * n + j] - mx);
                s += out[i * n + j];
            }
        }
        for (std::size_t j = 0; j < n; ++j) {
            out[i * n + j] /= s;
        }
    }
    return detail::make_result(a.shape(), std::move(out), {a}, "softmax_rows", [m, n](Node& self) {
        if (double* d = grad_of(parent(self, 0))) {
            const double* y = self.value.data();
            const double* g = self.grad.data();
            for (std::size_t i = 0; i < m; ++i) {
                double dot = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    dot += y[i * n + j] * g[i * n + j];
                }
                for (std::size_t j = 0; j < n; ++j) {
                    d[i * n + j] += y[i * n + j] * (g[i * n + j] - dot);
                }
            }
        }
    });
}

Tensor softmax_rows(const Tensor& a) { return masked_softmax_rows(a, {}); }

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
    require_matrix(x, "layer_norm");
    const std::size_t m = x.rows(), n = x.cols();
    if (gamma.numel() != n || beta.numel() != n) {
        throw ShapeError("layer_norm: affine parameters do not match width " + std::to_string(n));
    }
    const auto v = x.data();
    const auto g = gamma.data();
    const auto b = beta.data();
    std::vector<double> out(m * n);
    std::vector<double> xhat(m * n);
    std::vector<double> inv_std(m);
    for (std::size_t i = 0; i < m; ++i) {
        double mu = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            mu += v[i * n + j];
        }
        mu /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double c = v[i * n + j] - mu;
            var += c * c;
        }
        var /= static_cast<double>(n);
        inv_std[i] = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < n; ++j) {
            xhat[i * n + j] = (v[i * n + j] - mu) * inv_std[i];
            out[i * n + j] = g[j] * xhat[i * n + j] + b[j];
        }
    }
    return detail::make_result(
        x.shape(), std::move(out), {x, gamma, beta}, "layer_norm",
        [m, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
            const double* G = self.grad.data();
            Node& ng = parent(self, 1);
            if (double* dg = grad_of(ng)) {
                for (std::size_t i = 0; i < m; ++i) {
                    for (std::size_t j = 0; j < n; ++j) {
                        dg[j] += G[i * n + j] * xhat[i * n + j];
                    }
                }
            }
            if (double* db = grad_of(parent(self, 2))) {
                for (std::size_t i = 0; i < m; ++i) {
                    for (std::size_t j = 0; j < n; ++j) {
                        db[j] += G[i * n + j];
                    }
                }
            }
            if (double* dx = grad_of(parent(self, 0))) {
                const double nn = static_cast<double>(n);
                for (std::size_t i = 0; i < m; ++i) {
                    double s1 = 0.0, s2 = 0.0;
                    for (std::size_t j = 0; j < n; ++j) {
                        const double dh = G[i * n + j] * ng.value[j];
                        s1 += dh;
                        s2 += dh * xhat[i * n + j];
                    }
                    for (std::size_t j = 0; j < n; ++j) {
                        const double dh = G[i * n + j] * ng.value[j];
                        dx[i * n + j] += inv_std[i] / nn * (nn * dh - s1 - xhat[i * n + j] * s2);
                    }
                }
            }
        });
}

Tensor embedding(const Tensor& table, std::span<const int> ids) {
    require_matrix(table, "embedding");
    const std::size_t vocab = table.rows(), c = table.cols();
    if (ids.empty()) {
        throw ShapeError("embedding: empty id list");
    }
    std::vector<double> out(ids.size() * c);
    const auto t = table.data();
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab) {
            throw IndexError("embedding: id " + std::to_string(ids[i]) + " outside table of " +
                             std::to_string(vocab) + " rows");
        }
        std::copy_n(t.begin() + static_cast<std::ptrdiff_t>(ids[i] * c), c, out.begin() + static_cast<std::ptrdiff_t>(i * c));
    }
    std::vector<int> idx(ids.begin(), ids.end());
    return detail::make_result({ids.size(), c}, std::move(out), {table}, "embedding",
                               [c, idx = std::move(idx)](Node& self) {
                                   if (double* d = grad_of(parent(self, 0))) {
                                       for (std::size_t i = 0; i < idx.size(); ++i) {
                                           double* row = d + static_cast<std::size_t>(idx[i]) * c;
                                           for (std::size_t j = 0; j < c; ++j) {
                                               row[j] += self.grad[i * c + j];
                                           }
                                       }
                                   }
                               });
}

std::size_t conv1d_out_len(std::size_t length, std::size_t width, Conv1dOptions opt) {
    if (opt.stride == 0) {
        throw ConfigError("conv1d: stride must be >= 1");
    }
    const std::size_t padded = length + 2 * opt.padding;
    if (padded < width) {
        throw ShapeError("conv1d: sequence too short, length " + std::to_string(length) + " (padding " +
                         std::to_string(opt.padding) + ") < kernel width " + std::to_string(width));
    }
    return (padded - width) / opt.stride + 1;
}

Tensor conv1d(const Tensor& x, const Tensor& kernel, Conv1dOptions opt) { return conv1d(x, kernel, Tensor{}, opt); }

Tensor conv1d(const Tensor& x, const Tensor& kernel, const Tensor& bias, Conv1dOptions opt) {
    require_matrix(x, "conv1d");
    if (kernel.rank() != 3) {
        throw ShapeError("conv1d: kernel must be [w x c_in x c_out], got " + shape_str(kernel.shape()));
    }
    const std::size_t T = x.rows(), ci = x.cols();
    const std::size_t w = kernel.dim(0), co = kernel.dim(2);
    if (kernel.dim(1) != ci) {
        throw ShapeError("conv1d: input has " + std::to_string(ci) + " channels, kernel expects " +
                         std::to_string(kernel.dim(1)));
    }
    const bool has_bias = bias.defined();
    if (has_bias && bias.numel() != co) {
        throw ShapeError("conv1d: bias does not match output channels");
    }
    const std::size_t To = conv1d_out_len(T, w, opt);
    const std::size_t stride = opt.stride;
    const auto pad = static_cast<std::ptrdiff_t>(opt.padding);
    const double* X = x.data().data();
    const double* K = kernel.data().data();
    std::vector<double> out(To * co, 0.0);
    for (std::size_t t = 0; t < To; ++t) {
        double* orow = out.data() + t * co;
        if (has_bias) {
            std::copy(bias.data().begin(), bias.data().end(), orow);
        }
        for (std::size_t kk = 0; kk < w; ++kk) {
            const std::ptrdiff_t ti = static_cast<std::ptrdiff_t>(t * stride + kk) - pad;
            if (ti < 0 || ti >= static_cast<std::ptrdiff_t>(T)) {
                continue;
            }
            const double* xrow = X + static_cast<std::size_t>(ti) * ci;
            for (std::size_t c = 0; c < ci; ++c) {
                const double xv = xrow[c];
                const double* krow = K + (kk * ci + c) * co;
                for (std::size_t o = 0; o < co; ++o) {
                    orow[o] += xv * krow[o];
                }
            }
        }
    }
    std::vector<Tensor> inputs{x, kernel};
    if (has_bias) {
        inputs.push_back(bias);
    }
    return detail::make_result(
        {To, co}, std::move(out), std::move(inputs), "conv1d",
        [T, ci, w, co, To, stride, pad, has_bias](Node& self) {
            Node& nx = parent(self, 0);
            Node& nk = parent(self, 1);
            const double* G = self.grad.data();
            double* dx = grad_of(nx);
            double* dk = grad_of(nk);
            // Kernel transposed to [w x c_out x c_in] so the input gradient is an axpy over channels.
            std::vector<double> kt;
            if (dx) {
                kt.resize(w * co * ci);
                for (std::size_t kk = 0; kk < w; ++kk) {
                    for (std::size_t c = 0; c < ci; ++c) {
                        for (std::size_t o = 0; o < co; ++o) {
                            kt[(kk * co + o) * ci + c] = nk.value[(kk * ci + c) * co + o];
                        }
                    }
                }
            }
            for (std::size_t t = 0; t < To; ++t) {
                const double* grow = G + t * co;
                for (std::size_t kk = 0; kk < w; ++kk) {
                    const std::ptrdiff_t ti = static_cast<std::ptrdiff_t>(t * stride + kk) - pad;
                    if (ti < 0 || ti >= static_cast<std::ptrdiff_t>(T)) {
                        continue;
                    }
                    const std::size_t row = static_cast<std::size_t>(ti) * ci;
                    if (dx) {
                        double* dxrow = dx + row;
                        for (std::size_t o = 0; o < co; ++o) {
                            const double g = grow[o];
                            const double* ktrow = kt.data() + (kk * co + o) * ci;
                            for (std::size_t c = 0; c < ci; ++c) {
                                dxrow[c] += g * ktrow[c];
                            }
                        }
                    }
                    if (dk) {
                        for (std::size_t c = 0; c < ci; ++c) {
                            const double xv = nx.value[row + c];
                            double* dkrow = dk + (kk * ci + c) * co;
                            for (std::size_t o = 0; o < co; ++o) {
                                dkrow[o] += xv * grow[o];
                            }
                        }
                    }
                }
            }
            if (has_bias) {
                if (double* db = grad_of(parent(self, 2))) {
                    for (std::size_t t = 0; t < To; ++t) {
                        for (std::size_t o = 0; o < co; ++o) {
                            db[o] += G[t * co + o];
                        }
                    }
                }
            }
        });
}

Tensor upsample_nearest(const Tensor& x, std::size_t factor) {
    require_matrix(x, "upsample_nearest");
    if (factor == 0) {
        throw ConfigError("upsample_nearest: factor must be >= 1");
    }
    const std::size_t T = x.rows(), c = x.cols();
    std::vector<double> out(T * factor * c);
    const auto v = x.data();
    for (std::size_t t = 0; t < T * factor; ++t) {
        std::copy_n(v.begin() + static_cast<std::ptrdiff_t>((t / factor) * c), c,
                    out.begin() + static_cast<std::ptrdiff_t>(t * c));
    }
    return detail::make_result({T * factor, c}, std::move(out), {x}, "upsample_nearest",
                               [T, c, factor](Node& self) {
                                   if (double* d = grad_of(parent(self, 0))) {
                                       for (std::size_t t = 0; t < T * factor; ++t) {
                                           for (std::size_t j = 0; j < c; ++j) {
                                               d[(t / factor) * c + j] += self.grad[t * c + j];
                                           }
                                       }
                                   }
                               });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end) {
    require_matrix(x, "slice_cols");
    const std::size_t m = x.rows(), n = x.cols();
    if (begin >= end || end > n) {
        throw ShapeError("slice_cols: bad range [" + std::to_string(begin) + ", " + std::to_string(end) + ") for " +
                         shape_str(x.shape()));
    }
    const std::size_t w = end - begin;
    std::vector<double> out(m * w);
    const auto v = x.data();
    for (std::size_t i = 0; i < m; ++i) {
        std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(i * n + begin), w,
                    out.begin() + static_cast<std::ptrdiff_t>(i * w));
    }
    return detail::make_result({m, w}, std::move(out), {x}, "slice_cols", [m, n, w, begin](Node& self) {
        if (double* d = grad_of(parent(self, 0))) {
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < w; ++j) {
                    d[i * n + begin + j] += self.grad[i * w + j];
                }
            }
        }
    });
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end) {
    require_matrix(x, "slice_rows");
    const std::size_t m = x.rows(), n = x.cols();
    if (begin >= end || end > m) {
        throw ShapeError("slice_rows: bad range [" + std::to_string(begin) + ", " + std::to_string(end) + ") for " +
                         shape_str(x.shape()));
    }
    std::vector<double> out(x.data().begin() + static_cast<std::ptrdiff_t>(begin * n),
                            x.data().begin() + static_cast<std::ptrdiff_t>(end * n));
    return detail::make_result({end - begin, n}, std::move(out), {x}, "slice_rows", [n, begin](Node& self) {
        if (double* d = grad_of(parent(self, 0))) {
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                d[begin * n + i] += self.grad[i];
            }
        }
    });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) {
        throw ShapeError("concat_cols: no inputs");
    }
    const std::size_t m = parts.front().rows();
    std::vector<std::size_t> offsets;
    std::size_t n = 0;
    for (const auto& p : parts) {
        require_matrix(p, "concat_cols");
        if (p.rows() != m) {
            throw ShapeError("concat_cols: row counts differ");
        }
        offsets.push_back(n);
        n += p.cols();
    }
    std::vector<double> out(m * n);
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const auto v = parts[k].data();
        const std::size_t w = parts[k].cols();
        for (std::size_t i = 0; i < m; ++i) {
            std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(i * w), w,
                        out.begin() + static_cast<std::ptrdiff_t>(i * n + offsets[k]));
        }
    }
    return detail::make_result({m, n}, std::move(out), parts, "concat_cols",
                               [m, n, offsets = std::move(offsets)](Node& self) {
                                   for (std::size_t k = 0; k < self.parents.size(); ++k) {
                                       Node& p = parent(self, k);
                                       if (double* d = grad_of(p)) {
                                           const std::size_t w = p.value.size() / m;
                                           for (std::size_t i = 0; i < m; ++i) {
                                               for (std::size_t j = 0; j < w; ++j) {
                                                   d[i * w + j] += self.grad[i * n + offsets[k] + j];
                                               }
                                           }
                                       }
                                   }
                               });
}

Tensor sum(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data()) {
        s += v;
    }
    return detail::make_result({1}, {s}, {a}, "sum", [](Node& self) {
        if (double* d = grad_of(parent(self, 0))) {
            const std::size_t n = parent(self, 0).value.size();
            for (std::size_t i = 0; i < n; ++i) {
                d[i] += self.grad[0];
            }
        }
    });
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.numel())); }

Tensor sum_squares(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data()) {
        s += v * v;
    }
    return detail::make_result({1}, {s}, {a}, "sum_squares", [](Node& self) {
        Node& na = parent(self, 0);
        if (double* d = grad_of(na)) {
            for (std::size_t i = 0; i < na.value.size(); ++i) {
                d[i] += 2.0 * na.value[i] * self.grad[0];
            }
        }
    });
}

Tensor l1_loss(const Tensor& prediction, const Tensor& target) {
    require_same_shape(prediction, target, "l1_loss");
    const auto p = prediction.data();
    const auto t = target.data();
    const double inv = 1.0 / static_cast<double>(p.size());
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        s += std::abs(p[i] - t[i]);
    }
    return detail::make_result({1}, {s * inv}, {prediction, target}, "l1_loss", [inv](Node& self) {
        Node& np = parent(self, 0);
        Node& nt = parent(self, 1);
        const double g = self.grad[0] * inv;
        double* dp = grad_of(np);
        double* dt = grad_of(nt);
        for (std::size_t i = 0; i < np.value.size(); ++i) {
            const double diff = np.value[i] - nt.value[i];
            const double sgn = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
            if (dp) {
                dp[i] += g * sgn;
            }
            if (dt) {
                dt[i] -= g * sgn;
            }
        }
    });
}

Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> targets) {
    require_matrix(logits, "softmax_cross_entropy");
    const std::size_t m = logits.rows(), C = logits.cols();
    if (targets.size() != m) {
        throw ShapeError("softmax_cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                         std::to_string(m) + " rows");
    }
    const auto x = logits.data();
    std::vector<double> probs(m * C);
    double loss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        if (targets[i] < 0 || static_cast<std::size_t>(targets[i]) >= C) {
            throw IndexError("softmax_cross_entropy: target " + std::to_string(targets[i]) + " outside [0, " +
                             std::to_string(C) + ")");
        }
        const double* row = x.data() + i * C;
        const double mx = *std::max_element(row, row + C);
        double s = 0.0;
        for (std::size_t j = 0; j < C; ++j) {
            probs[i * C + j] = std::exp(row[j] - mx);
            s += probs[i * C + j];
        }
        for (std::size_t j = 0; j < C; ++j) {
            probs[i * C + j] /= s;
        }
        loss += mx + std::log(s) - row[targets[i]];
    }
    const double inv = 1.0 / static_cast<double>(m);
    std::vector<int> tgt(targets.begin(), targets.end());
    return detail::make_result({1}, {loss * inv}, {logits}, "softmax_cross_entropy",
                               [m, C, inv, probs = std::move(probs), tgt = std::move(tgt)](Node& self) {
                                   if (double* d = grad_of(parent(self, 0))) {
                                       const double g = self.grad[0] * inv;
                                       for (std::size_t i = 0; i < m; ++i) {
                                           for (std::size_t j = 0; j < C; ++j) {
                                               const double onehot = static_cast<int>(j) == tgt[i] ? 1.0 : 0.0;
                                               d[i * C + j] += g * (probs[i * C + j] - onehot);
                                           }
                                       }
                                   }
                               });
}

Tensor straight_through(const Tensor& continuous, const Tensor& quantized) {
    require_same_shape(continuous, quantized, "straight_through");
    std::vector<double> out(quantized.data().begin(), quantized.data().end());
    return detail::make_result(continuous.shape(), std::move(out), {continuous}, "straight_through", [](Node& self) {
        if (double* d = grad_of(parent(self, 0))) {
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                d[i] += self.grad[i];
            }
        }
    });
}

}  // namespace tm2d::num
