#include "porogen/layers.hpp"

#include <Eigen/Core>
#include <cmath>

namespace porogen::nn {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

// Unfolds one (c, h, w) image into a (c*k*k, out_h*out_w) patch matrix.
void im2col(const double* img, int channels, int h, int w, const ConvGeometry& g, int out_h, int out_w,
            double* cols) {
    const int k = g.kernel;
    const std::size_t positions = static_cast<std::size_t>(out_h) * out_w;
    for (int c = 0; c < channels; ++c) {
        const double* src = img + static_cast<std::size_t>(c) * h * w;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                double* row = cols + (static_cast<std::size_t>(c) * k * k + ky * k + kx) * positions;
                for (int oy = 0; oy < out_h; ++oy) {
                    const int iy = oy * g.stride - g.padding + ky;
                    double* dst = row + static_cast<std::size_t>(oy) * out_w;
                    if (iy < 0 || iy >= h) {
                        for (int ox = 0; ox < out_w; ++ox) dst[ox] = 0.0;
                        continue;
                    }
                    const double* line = src + static_cast<std::size_t>(iy) * w;
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int ix = ox * g.stride - g.padding + kx;
                        dst[ox] = (ix >= 0 && ix < w) ? line[ix] : 0.0;
                    }
                }
            }
        }
    }
}

// Adjoint of im2col: scatters-and-adds the patch matrix back into the image.
void col2im(const double* cols, int channels, int h, int w, const ConvGeometry& g, int out_h, int out_w,
            double* img) {
    const int k = g.kernel;
    const std::size_t positions = static_cast<std::size_t>(out_h) * out_w;
    for (int c = 0; c < channels; ++c) {
        double* dst = img + static_cast<std::size_t>(c) * h * w;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const double* row = cols + (static_cast<std::size_t>(c) * k * k + ky * k + kx) * positions;
                for (int oy = 0; oy < out_h; ++oy) {
                    const int iy = oy * g.stride - g.padding + ky;
                    if (iy < 0 || iy >= h) continue;
                    double* line = dst + static_cast<std::size_t>(iy) * w;
                    const double* src = row + static_cast<std::size_t>(oy) * out_w;
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int ix = ox * g.stride - g.padding + kx;
                        if (ix >= 0 && ix < w) line[ix] += src[ox];
                    }
                }
            }
        }
    }
}

void check_geometry(const ConvGeometry& g) {
    if (g.kernel < 1 || g.stride < 1 || g.padding < 0) throw ValueError("invalid convolution geometry");
}

void check_bias(const Var& bias, int channels) {
    if (bias && bias->value.shape() != Shape{1, channels, 1, 1})
        throw ValueError("bias shape " + bias->value.shape().str() + " does not match " + std::to_string(channels) +
                         " output channels");
}

void add_bias(Tensor& out, const Tensor& bias) {
    const Shape s = out.shape();
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c) {
            double* p = out.plane(n, c);
            const double b = bias[static_cast<std::size_t>(c)];
            for (std::size_t i = 0; i < s.plane(); ++i) p[i] += b;
        }
}

void accumulate_bias_grad(const Tensor& dout, Tensor& dbias) {
    const Shape s = dout.shape();
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c) {
            const double* p = dout.plane(n, c);
            double sum = 0.0;
            for (std::size_t i = 0; i < s.plane(); ++i) sum += p[i];
            dbias[static_cast<std::size_t>(c)] += sum;
        }
}

std::vector<Var> with_optional(std::initializer_list<Var> vars) {
    std::vector<Var> out;
    for (const auto& v : vars)
        if (v) out.push_back(v);
    return out;
}

} // namespace

int conv_output_size(int in, const ConvGeometry& g) {
    const int span = in + 2 * g.padding - g.kernel;
    if (span < 0) return 0;
    return span / g.stride + 1;
}

int conv_transpose_output_size(int in, const ConvGeometry& g) {
    return (in - 1) * g.stride - 2 * g.padding + g.kernel;
}

Var conv2d(const Var& input, const Var& weight, const Var& bias, const ConvGeometry& g) {
    check_geometry(g);
    const Shape in = input->value.shape();
    const Shape ws = weight->value.shape();
    if (ws.c != in.c || ws.h != g.kernel || ws.w != g.kernel)
        throw ValueError("conv2d weight " + ws.str() + " incompatible with input " + in.str());
    check_bias(bias, ws.n);
    const int out_h = conv_output_size(in.h, g);
    const int out_w = conv_output_size(in.w, g);
    if (out_h <= 0 || out_w <= 0) throw ValueError("conv2d output would be empty for input " + in.str());

    const Shape os{in.n, ws.n, out_h, out_w};
    const auto patch = static_cast<Eigen::Index>(in.c) * g.kernel * g.kernel;
    const auto positions = static_cast<Eigen::Index>(out_h) * out_w;
    auto cols = std::make_shared<std::vector<double>>(static_cast<std::size_t>(in.n) * patch * positions);

    Tensor out(os);
    const ConstMatMap wmat(weight->value.ptr(), ws.n, patch);
    for (int n = 0; n < in.n; ++n) {
        double* c = cols->data() + static_cast<std::size_t>(n) * patch * positions;
        im2col(input->value.plane(n, 0), in.c, in.h, in.w, g, out_h, out_w, c);
        MatMap omat(out.plane(n, 0), ws.n, positions);
        omat.noalias() = wmat * ConstMatMap(c, patch, positions);
    }
    if (bias) add_bias(out, bias->value);

    return make_node(std::move(out), with_optional({input, weight, bias}), [=](Node& self) {
        const Tensor& dout = self.grad;
        const ConstMatMap wm(weight->value.ptr(), ws.n, patch);
        std::vector<double> dcols(input->requires_grad ? static_cast<std::size_t>(patch * positions) : 0);
        for (int n = 0; n < in.n; ++n) {
            const ConstMatMap dmat(dout.plane(n, 0), ws.n, positions);
            const ConstMatMap cmat(cols->data() + static_cast<std::size_t>(n) * patch * positions, patch, positions);
            if (weight->requires_grad) {
                MatMap dw(weight->grad.ptr(), ws.n, patch);
                dw.noalias() += dmat * cmat.transpose();
            }
            if (input->requires_grad) {
                MatMap dc(dcols.data(), patch, positions);
                dc.noalias() = wm.transpose() * dmat;
                col2im(dcols.data(), in.c, in.h, in.w, g, out_h, out_w, input->grad.plane(n, 0));
            }
        }
        if (bias && bias->requires_grad) accumulate_bias_grad(dout, bias->grad);
    });
}

Var conv_transpose2d(const Var& input, const Var& weight, const Var& bias, const ConvGeometry& g) {
    check_geometry(g);
    const Shape in = input->value.shape();
    const Shape ws = weight->value.shape();
    if (ws.n != in.c || ws.h != g.kernel || ws.w != g.kernel)
        throw ValueError("conv_transpose2d weight " + ws.str() + " incompatible with input " + in.str());
    check_bias(bias, ws.c);
    const int out_h = conv_transpose_output_size(in.h, g);
    const int out_w = conv_transpose_output_size(in.w, g);
    if (out_h <= 0 || out_w <= 0) throw ValueError("conv_transpose2d output would be empty for input " + in.str());

    const Shape os{in.n, ws.c, out_h, out_w};
    const auto patch = static_cast<Eigen::Index>(ws.c) * g.kernel * g.kernel;
    const auto positions = static_cast<Eigen::Index>(in.h) * in.w;

    Tensor out(os);
    std::vector<double> cols(static_cast<std::size_t>(patch * positions));
    const ConstMatMap wmat(weight->value.ptr(), in.c, patch);
    for (int n = 0; n < in.n; ++n) {
        const ConstMatMap xmat(input->value.plane(n, 0), in.c, positions);
        MatMap cmat(cols.data(), patch, positions);
        cmat.noalias() = wmat.transpose() * xmat;
        col2im(cols.data(), ws.c, out_h, out_w, g, in.h, in.w, out.plane(n, 0));
    }
    if (bias) add_bias(out, bias->value);

    return make_node(std::move(out), with_optional({input, weight, bias}), [=](Node& self) {
        const Tensor& dout = self.grad;
        const ConstMatMap wm(weight->value.ptr(), in.c, patch);
        std::vector<double> dcols(static_cast<std::size_t>(patch * positions));
        for (int n = 0; n < in.n; ++n) {
            im2col(dout.plane(n, 0), ws.c, out_h, out_w, g, in.h, in.w, dcols.data());
            const ConstMatMap dc(dcols.data(), patch, positions);
            if (input->requires_grad) {
                MatMap dx(input->grad.plane(n, 0), in.c, positions);
                dx.noalias() += wm * dc;
            }
            if (weight->requires_grad) {
                MatMap dw(weight->grad.ptr(), in.c, patch);
                dw.noalias() += ConstMatMap(input->value.plane(n, 0), in.c, positions) * dc.transpose();
            }
        }
        if (bias && bias->requires_grad) accumulate_bias_grad(dout, bias->grad);
    });
}

Var instance_norm(const Var& input, const Var& gamma, const Var& beta, double eps) {
    const Shape s = input->value.shape();
    if ((gamma == nullptr) != (beta == nullptr)) throw ValueError("instance_norm needs both gamma and beta, or neither");
    if (gamma && (gamma->value.shape() != Shape{1, s.c, 1, 1} || beta->value.shape() != Shape{1, s.c, 1, 1}))
        throw ValueError("instance_norm affine parameters must have shape (1," + std::to_string(s.c) + ",1,1)");
    const std::size_t m = s.plane();
    if (m == 0) throw ValueError("instance_norm needs a nonempty spatial extent");

    auto xhat = std::make_shared<Tensor>(s);
    auto inv_std = std::make_shared<std::vector<double>>(static_cast<std::size_t>(s.n) * s.c);
    Tensor out(s);
    for (int n = 0; n < s.n; ++n) {
        for (int c = 0; c < s.c; ++c) {
            const double* x = input->value.plane(n, c);
            double mean = 0.0;
            for (std::size_t i = 0; i < m; ++i) mean += x[i];
            mean /= static_cast<double>(m);
            double var = 0.0;
            for (std::size_t i = 0; i < m; ++i) var += (x[i] - mean) * (x[i] - mean);
            var /= static_cast<double>(m);
            const double is = 1.0 / std::sqrt(var + eps);
            (*inv_std)[static_cast<std::size_t>(n) * s.c + c] = is;
            double* xh = xhat->plane(n, c);
            double* y = out.plane(n, c);
            const double gm = gamma ? gamma->value[static_cast<std::size_t>(c)] : 1.0;
            const double bt = beta ? beta->value[static_cast<std::size_t>(c)] : 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                xh[i] = (x[i] - mean) * is;
                y[i] = gm * xh[i] + bt;
            }
        }
    }

    return make_node(std::move(out), with_optional({input, gamma, beta}), [=](Node& self) {
        const double inv_m = 1.0 / static_cast<double>(m);
        for (int n = 0; n < s.n; ++n) {
            for (int c = 0; c < s.c; ++c) {
                const double* dy = self.grad.plane(n, c);
                const double* xh = xhat->plane(n, c);
                double sum_dy = 0.0;
                double sum_dy_xh = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    sum_dy += dy[i];
                    sum_dy_xh += dy[i] * xh[i];
                }
                if (gamma && gamma->requires_grad) gamma->grad[static_cast<std::size_t>(c)] += sum_dy_xh;
                if (beta && beta->requires_grad) beta->grad[static_cast<std::size_t>(c)] += sum_dy;
                if (!input->requires_grad) continue;
                const double gm = gamma ? gamma->value[static_cast<std::size_t>(c)] : 1.0;
                const double scale = gm * (*inv_std)[static_cast<std::size_t>(n) * s.c + c];
                double* dx = input->grad.plane(n, c);
                for (std::size_t i = 0; i < m; ++i)
                    dx[i] += scale * (dy[i] - inv_m * sum_dy - xh[i] * inv_m * sum_dy_xh);
            }
        }
    });
}

namespace {

template <typename Fwd, typename Deriv>
Var elementwise(const Var& input, Fwd f, Deriv df) {
    Tensor out(input->value.shape());
    const auto x = input->value.data();
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
    return make_node(std::move(out), {input}, [=](Node& self) {
        const auto xv = input->value.data();
        auto dx = input->grad.data();
        const auto dy = self.grad.data();
        const auto y = self.value.data();
        for (std::size_t i = 0; i < xv.size(); ++i) dx[i] += dy[i] * df(xv[i], y[i]);
    });
}

} // namespace

namespace {
thread_local KinkProbe* active_probe = nullptr;
} // namespace

KinkProbe::KinkProbe() : previous_(active_probe) { active_probe = this; }
KinkProbe::~KinkProbe() { active_probe = previous_; }

void KinkProbe::record(const Tensor& input) {
    for (double x : input.data()) {
        hash_ ^= x > 0.0 ? 0x9Eu : 0x3Bu;
        hash_ *= 1099511628211ull;
    }
}

Var relu(const Var& input) {
    if (active_probe) active_probe->record(input->value);
    return elementwise(
        input, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var leaky_relu(const Var& input, double slope) {
    if (active_probe) active_probe->record(input->value);
    return elementwise(
        input, [slope](double x) { return x > 0.0 ? x : slope * x; },
        [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

Var sigmoid(const Var& input) {
    return elementwise(
        input,
        [](double x) {
            if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
            const double e = std::exp(x);
            return e / (1.0 + e);
        },
        [](double, double y) { return y * (1.0 - y); });
}

Var concat_channels(const Var& a, const Var& b) {
    const Shape sa = a->value.shape();
    const Shape sb = b->value.shape();
    if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w)
        throw ValueError("concat_channels shape mismatch: " + sa.str() + " vs " + sb.str());
    const Shape os{sa.n, sa.c + sb.c, sa.h, sa.w};
    Tensor out(os);
    const std::size_t la = static_cast<std::size_t>(sa.c) * sa.plane();
    const std::size_t lb = static_cast<std::size_t>(sb.c) * sb.plane();
    for (int n = 0; n < sa.n; ++n) {
        std::copy_n(a->value.plane(n, 0), la, out.plane(n, 0));
        std::copy_n(b->value.plane(n, 0), lb, out.plane(n, sa.c));
    }
    return make_node(std::move(out), {a, b}, [=](Node& self) {
        for (int n = 0; n < sa.n; ++n) {
            if (a->requires_grad) {
                const double* src = self.grad.plane(n, 0);
                double* dst = a->grad.plane(n, 0);
                for (std::size_t i = 0; i < la; ++i) dst[i] += src[i];
            }
            if (b->requires_grad) {
                const double* src = self.grad.plane(n, sa.c);
                double* dst = b->grad.plane(n, 0);
                for (std::size_t i = 0; i < lb; ++i) dst[i] += src[i];
            }
        }
    });
}

Var replicate_concat(const Var& features, const Var& noise) {
    const Shape sf = features->value.shape();
    const Shape sz = noise->value.shape();
    if (sz.n != sf.n || sz.h != 1 || sz.w != 1)
        throw ValueError("noise must have shape (n, n_z, 1, 1) matching the batch; got " + sz.str());
    const Shape os{sf.n, sf.c + sz.c, sf.h, sf.w};
    Tensor out(os);
    const std::size_t lf = static_cast<std::size_t>(sf.c) * sf.plane();
    for (int n = 0; n < sf.n; ++n) {
        std::copy_n(features->value.plane(n, 0), lf, out.plane(n, 0));
        for (int i = 0; i < sz.c; ++i) std::fill_n(out.plane(n, sf.c + i), sf.plane(), noise->value.at(n, i, 0, 0));
    }
    return make_node(std::move(out), {features, noise}, [=](Node& self) {
        for (int n = 0; n < sf.n; ++n) {
            if (features->requires_grad) {
                const double* src = self.grad.plane(n, 0);
                double* dst = features->grad.plane(n, 0);
                for (std::size_t i = 0; i < lf; ++i) dst[i] += src[i];
            }
            if (noise->requires_grad) {
                for (int i = 0; i < sz.c; ++i) {
                    const double* src = self.grad.plane(n, sf.c + i);
                    double sum = 0.0;
                    for (std::size_t j = 0; j < sf.plane(); ++j) sum += src[j];
                    noise->grad.at(n, i, 0, 0) += sum;
                }
            }
        }
    });
}

Var spatial_mean(const Var& input) {
    const Shape s = input->value.shape();
    const std::size_t per = static_cast<std::size_t>(s.c) * s.plane();
    if (per == 0) throw ValueError("spatial_mean of empty tensor");
    Tensor out(Shape{s.n, 1, 1, 1});
    for (int n = 0; n < s.n; ++n) {
        const double* x = input->value.plane(n, 0);
        double sum = 0.0;
        for (std::size_t i = 0; i < per; ++i) sum += x[i];
        out[static_cast<std::size_t>(n)] = sum / static_cast<double>(per);
    }
    return make_node(std::move(out), {input}, [=](Node& self) {
        for (int n = 0; n < s.n; ++n) {
            const double g = self.grad[static_cast<std::size_t>(n)] / static_cast<double>(per);
            double* dx = input->grad.plane(n, 0);
            for (std::size_t i = 0; i < per; ++i) dx[i] += g;
        }
    });
}

} // namespace porogen::nn
