#include "fdm/nn.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace fdm {

namespace {

void init_uniform(Tensor& t, double bound, Rng& rng) {
    for (double& v : t.data) v = uniform(rng, -bound, bound);
}

void check_rank2(const Tensor& x, int cols, const char* who) {
    if (x.rank() != 2 || x.dim(1) != cols)
        throw std::invalid_argument(std::string(who) + ": shape mismatch");
}

}  // namespace

void sigmoid_inplace(Tensor& t) {
    for (double& v : t.data) v = 1.0 / (1.0 + std::exp(-v));
}

void tanh_inplace(Tensor& t) {
    for (double& v : t.data) v = std::tanh(v);
}

Dense::Dense(std::string name, int in_dim, int out_dim, Rng& rng)
    : in(in_dim),
      out(out_dim),
      W(name + ".W", {out_dim, in_dim}),
      b(name + ".b", {out_dim}) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
    init_uniform(W.v, bound, rng);
    init_uniform(b.v, bound, rng);
}

Tensor Dense::forward(const Tensor& x, bool cache) {
    check_rank2(x, in, "Dense");
    const int B = x.dim(0);
    Tensor y({B, out});
    gemm(y.ptr(), x.ptr(), W.v.ptr(), B, out, in, false, true);
    for (int i = 0; i < B; ++i)
        for (int j = 0; j < out; ++j) y[static_cast<std::size_t>(i) * out + j] += b.v[j];
    if (cache) cache_x_.push_back(x);
    return y;
}

Tensor Dense::backward(const Tensor& dy) {
    if (cache_x_.empty()) throw std::logic_error("Dense backward before forward");
    Tensor x = std::move(cache_x_.back());
    cache_x_.pop_back();
    const int B = x.dim(0);
    gemm(W.g.ptr(), dy.ptr(), x.ptr(), out, in, B, true, false, 1.0, 1.0);
    for (int i = 0; i < B; ++i)
        for (int j = 0; j < out; ++j) b.g[j] += dy[static_cast<std::size_t>(i) * out + j];
    Tensor dx({B, in});
    gemm(dx.ptr(), dy.ptr(), W.v.ptr(), B, in, out, false, false);
    return dx;
}

void Dense::collect(std::vector<Param*>& ps) {
    ps.push_back(&W);
    ps.push_back(&b);
}

Tensor LeakyRelu::forward(const Tensor& x, bool cache) {
    Tensor y = x;
    for (double& v : y.data) v = v > 0.0 ? v : slope * v;
    if (cache) cache_x_.push_back(x);
    return y;
}

Tensor LeakyRelu::backward(const Tensor& dy) {
    if (cache_x_.empty()) throw std::logic_error("LeakyRelu backward before forward");
    Tensor x = std::move(cache_x_.back());
    cache_x_.pop_back();
    Tensor dx = dy;
    for (std::size_t i = 0; i < dx.data.size(); ++i)
        if (x[i] <= 0.0) dx[i] *= slope;
    return dx;
}

Tensor Sigmoid::forward(const Tensor& x, bool cache) {
    Tensor y = x;
    sigmoid_inplace(y);
    if (cache) cache_y_.push_back(y);
    return y;
}

Tensor Sigmoid::backward(const Tensor& dy) {
    if (cache_y_.empty()) throw std::logic_error("Sigmoid backward before forward");
    Tensor y = std::move(cache_y_.back());
    cache_y_.pop_back();
    Tensor dx = dy;
    for (std::size_t i = 0; i < dx.data.size(); ++i) dx[i] *= y[i] * (1.0 - y[i]);
    return dx;
}

Tensor Tanh::forward(const Tensor& x, bool cache) {
    Tensor y = x;
    tanh_inplace(y);
    if (cache) cache_y_.push_back(y);
    return y;
}

Tensor Tanh::backward(const Tensor& dy) {
    if (cache_y_.empty()) throw std::logic_error("Tanh backward before forward");
    Tensor y = std::move(cache_y_.back());
    cache_y_.pop_back();
    Tensor dx = dy;
    for (std::size_t i = 0; i < dx.data.size(); ++i) dx[i] *= 1.0 - y[i] * y[i];
    return dx;
}

Tensor Dropout::forward(const Tensor& x, bool train, Rng& rng, bool cache) {
    const bool active = train && p > 0.0;
    if (cache) cache_active_.push_back(active);
    if (!active) return x;
    Tensor mask(x.shape);
    const double keep = 1.0 - p;
    for (double& m : mask.data) m = uniform(rng, 0.0, 1.0) < keep ? 1.0 / keep : 0.0;
    Tensor y = x;
    for (std::size_t i = 0; i < y.data.size(); ++i) y[i] *= mask[i];
    if (cache) cache_mask_.push_back(std::move(mask));
    return y;
}

Tensor Dropout::backward(const Tensor& dy) {
    if (cache_active_.empty()) throw std::logic_error("Dropout backward before forward");
    const bool active = cache_active_.back();
    cache_active_.pop_back();
    if (!active) return dy;
    Tensor mask = std::move(cache_mask_.back());
    cache_mask_.pop_back();
    Tensor dx = dy;
    for (std::size_t i = 0; i < dx.data.size(); ++i) dx[i] *= mask[i];
    return dx;
}

Conv2d::Conv2d(std::string name, int cin_, int cout_, int k, int stride_, Rng& rng)
    : cin(cin_),
      cout(cout_),
      kh(k),
      kw(k),
      stride(stride_),
      W(name + ".W", {cout_, cin_ * k * k}),
      b(name + ".b", {cout_}) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(cin_) * k * k);
    init_uniform(W.v, bound, rng);
    init_uniform(b.v, bound, rng);
}

Tensor Conv2d::forward(const Tensor& x, bool cache) {
    if (x.rank() != 4 || x.dim(1) != cin) throw std::invalid_argument("Conv2d: shape mismatch");
    const int B = x.dim(0), H = x.dim(2), Wd = x.dim(3);
    if (H < kh || Wd < kw) throw std::invalid_argument("Conv2d: input smaller than kernel");
    const int Ho = out_extent(H, kh, stride), Wo = out_extent(Wd, kw, stride);
    const int K = cin * kh * kw;
    const std::int64_t rows = static_cast<std::int64_t>(B) * Ho * Wo;

    Tensor col({static_cast<int>(rows), K});
    const double* xp = x.ptr();
    double* cp = col.ptr();
    for (int bi = 0; bi < B; ++bi)
        for (int ho = 0; ho < Ho; ++ho)
            for (int wo = 0; wo < Wo; ++wo) {
                double* row = cp + ((static_cast<std::int64_t>(bi) * Ho + ho) * Wo + wo) * K;
                for (int c = 0; c < cin; ++c) {
                    const double* src =
                        xp + ((static_cast<std::int64_t>(bi) * cin + c) * H + ho * stride) * Wd +
                        wo * stride;
                    for (int r = 0; r < kh; ++r)
                        for (int s = 0; s < kw; ++s)
                            row[(c * kh + r) * kw + s] = src[r * Wd + s];
                }
            }

    Tensor y2({static_cast<int>(rows), cout});
    gemm(y2.ptr(), col.ptr(), W.v.ptr(), static_cast<int>(rows), cout, K, false, true);

    Tensor y({B, cout, Ho, Wo});
    double* yp = y.ptr();
    for (int bi = 0; bi < B; ++bi)
        for (int c = 0; c < cout; ++c)
            for (int o = 0; o < Ho * Wo; ++o)
                yp[(static_cast<std::int64_t>(bi) * cout + c) * Ho * Wo + o] =
                    y2[(static_cast<std::int64_t>(bi) * Ho * Wo + o) * cout + c] + b.v[c];

    if (cache) {
        cache_col_.push_back(std::move(col));
        cache_dims_.push_back({B, H, Wd});
    }
    return y;
}

Tensor Conv2d::backward(const Tensor& dy) {
    if (cache_col_.empty()) throw std::logic_error("Conv2d backward before forward");
    Tensor col = std::move(cache_col_.back());
    cache_col_.pop_back();
    const auto dims = cache_dims_.back();
    cache_dims_.pop_back();
    const int B = dims[0], H = dims[1], Wd = dims[2];
    const int Ho = dy.dim(2), Wo = dy.dim(3);
    const int K = cin * kh * kw;
    const std::int64_t rows = static_cast<std::int64_t>(B) * Ho * Wo;

    Tensor dy2({static_cast<int>(rows), cout});
    const double* dyp = dy.ptr();
    for (int bi = 0; bi < B; ++bi)
        for (int c = 0; c < cout; ++c)
            for (int o = 0; o < Ho * Wo; ++o)
                dy2[(static_cast<std::int64_t>(bi) * Ho * Wo + o) * cout + c] =
                    dyp[(static_cast<std::int64_t>(bi) * cout + c) * Ho * Wo + o];

    gemm(W.g.ptr(), dy2.ptr(), col.ptr(), cout, K, static_cast<int>(rows), true, false, 1.0, 1.0);
    for (std::int64_t r = 0; r < rows; ++r)
        for (int c = 0; c < cout; ++c) b.g[c] += dy2[r * cout + c];

    Tensor dcol({static_cast<int>(rows), K});
    gemm(dcol.ptr(), dy2.ptr(), W.v.ptr(), static_cast<int>(rows), K, cout, false, false);

    Tensor dx({B, cin, H, Wd});
    double* dxp = dx.ptr();
    const double* dcp = dcol.ptr();
    for (int bi = 0; bi < B; ++bi)
        for (int ho = 0; ho < Ho; ++ho)
            for (int wo = 0; wo < Wo; ++wo) {
                const double* row =
                    dcp + ((static_cast<std::int64_t>(bi) * Ho + ho) * Wo + wo) * K;
                for (int c = 0; c < cin; ++c) {
                    double* dst =
                        dxp +
                        ((static_cast<std::int64_t>(bi) * cin + c) * H + ho * stride) * Wd +
                        wo * stride;
                    for (int r = 0; r < kh; ++r)
                        for (int s = 0; s < kw; ++s)
                            dst[r * Wd + s] += row[(c * kh + r) * kw + s];
                }
            }
    return dx;
}

void Conv2d::collect(std::vector<Param*>& ps) {
    ps.push_back(&W);
    ps.push_back(&b);
}

Tensor MaxPool::forward(const Tensor& x, bool cache) {
    if (x.rank() != 4) throw std::invalid_argument("MaxPool: rank-4 input expected");
    const int B = x.dim(0), C = x.dim(1), H = x.dim(2), Wd = x.dim(3);
    const int Ho = (H + 2 * pad - k) / stride + 1;
    const int Wo = (Wd + 2 * pad - k) / stride + 1;
    Tensor y({B, C, Ho, Wo});
    std::vector<std::int64_t> arg(static_cast<std::size_t>(B) * C * Ho * Wo);
    const double* xp = x.ptr();
    double* yp = y.ptr();
    std::int64_t oi = 0;
    for (int bi = 0; bi < B; ++bi)
        for (int c = 0; c < C; ++c) {
            const double* plane = xp + (static_cast<std::int64_t>(bi) * C + c) * H * Wd;
            for (int ho = 0; ho < Ho; ++ho)
                for (int wo = 0; wo < Wo; ++wo, ++oi) {
                    double best = -std::numeric_limits<double>::infinity();
                    std::int64_t best_idx = -1;
                    for (int r = 0; r < k; ++r) {
                        const int hi = ho * stride - pad + r;
                        if (hi < 0 || hi >= H) continue;
                        for (int s = 0; s < k; ++s) {
                            const int wi = wo * stride - pad + s;
                            if (wi < 0 || wi >= Wd) continue;
                            const double v = plane[static_cast<std::int64_t>(hi) * Wd + wi];
                            if (v > best) {
                                best = v;
                                best_idx = (static_cast<std::int64_t>(bi) * C + c) * H * Wd +
                                           static_cast<std::int64_t>(hi) * Wd + wi;
                            }
                        }
                    }
                    yp[oi] = best;
                    arg[oi] = best_idx;
                }
        }
    if (cache) {
        cache_arg_.push_back(std::move(arg));
        cache_dims_.push_back({B, C, H, Wd});
    }
    return y;
}

Tensor MaxPool::backward(const Tensor& dy) {
    if (cache_arg_.empty()) throw std::logic_error("MaxPool backward before forward");
    std::vector<std::int64_t> arg = std::move(cache_arg_.back());
    cache_arg_.pop_back();
    const auto dims = cache_dims_.back();
    cache_dims_.pop_back();
    Tensor dx({dims[0], dims[1], dims[2], dims[3]});
    for (std::size_t i = 0; i < arg.size(); ++i)
        if (arg[i] >= 0) dx[static_cast<std::size_t>(arg[i])] += dy[i];
    return dx;
}

GruCell::GruCell(std::string name, int in_dim, int hidden_dim, Rng& rng)
    : in(in_dim),
      hidden(hidden_dim),
      W_ih(name + ".W_ih", {3 * hidden_dim, in_dim}),
      b_ih(name + ".b_ih", {3 * hidden_dim}),
      W_hh(name + ".W_hh", {3 * hidden_dim, hidden_dim}),
      b_hh(name + ".b_hh", {3 * hidden_dim}) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    init_uniform(W_ih.v, bound, rng);
    init_uniform(b_ih.v, bound, rng);
    init_uniform(W_hh.v, bound, rng);
    init_uniform(b_hh.v, bound, rng);
}

Tensor GruCell::forward(const Tensor& x, const Tensor& h, bool cache) {
    check_rank2(x, in, "GruCell x");
    check_rank2(h, hidden, "GruCell h");
    const int B = x.dim(0);
    const int H3 = 3 * hidden;
    Tensor gi({B, H3}), gh({B, H3});
    gemm(gi.ptr(), x.ptr(), W_ih.v.ptr(), B, H3, in, false, true);
    gemm(gh.ptr(), h.ptr(), W_hh.v.ptr(), B, H3, hidden, false, true);
    for (int i = 0; i < B; ++i)
        for (int j = 0; j < H3; ++j) {
            gi[static_cast<std::size_t>(i) * H3 + j] += b_ih.v[j];
            gh[static_cast<std::size_t>(i) * H3 + j] += b_hh.v[j];
        }

    Cache c;
    c.x = x;
    c.h = h;
    c.r = Tensor({B, hidden});
    c.z = Tensor({B, hidden});
    c.n = Tensor({B, hidden});
    c.hn_aff = Tensor({B, hidden});
    Tensor out({B, hidden});
    for (int i = 0; i < B; ++i)
        for (int j = 0; j < hidden; ++j) {
            const std::size_t g0 = static_cast<std::size_t>(i) * H3;
            const std::size_t o = static_cast<std::size_t>(i) * hidden + j;
            const double r = 1.0 / (1.0 + std::exp(-(gi[g0 + j] + gh[g0 + j])));
            const double z =
                1.0 / (1.0 + std::exp(-(gi[g0 + hidden + j] + gh[g0 + hidden + j])));
            const double hn = gh[g0 + 2 * hidden + j];
            const double n = std::tanh(gi[g0 + 2 * hidden + j] + r * hn);
            c.r[o] = r;
            c.z[o] = z;
            c.n[o] = n;
            c.hn_aff[o] = hn;
            out[o] = (1.0 - z) * n + z * h[o];
        }
    if (cache) caches_.push_back(std::move(c));
    return out;
}

std::pair<Tensor, Tensor> GruCell::backward(const Tensor& dh_next) {
    if (caches_.empty()) throw std::logic_error("GruCell backward before forward");
    Cache c = std::move(caches_.back());
    caches_.pop_back();
    const int B = c.x.dim(0);
    const int H3 = 3 * hidden;

    Tensor dgi({B, H3}), dgh({B, H3});
    Tensor dh({B, hidden});
    for (int i = 0; i < B; ++i)
        for (int j = 0; j < hidden; ++j) {
            const std::size_t o = static_cast<std::size_t>(i) * hidden + j;
            const std::size_t g0 = static_cast<std::size_t>(i) * H3;
            const double dhn = dh_next[o];
            const double r = c.r[o], z = c.z[o], n = c.n[o], hn = c.hn_aff[o];
            const double dz = dhn * (c.h[o] - n);
            const double dn = dhn * (1.0 - z);
            const double dn_pre = dn * (1.0 - n * n);
            const double dr = dn_pre * hn;
            const double dhn_aff = dn_pre * r;
            const double dr_pre = dr * r * (1.0 - r);
            const double dz_pre = dz * z * (1.0 - z);
            dgi[g0 + j] = dr_pre;
            dgh[g0 + j] = dr_pre;
            dgi[g0 + hidden + j] = dz_pre;
            dgh[g0 + hidden + j] = dz_pre;
            dgi[g0 + 2 * hidden + j] = dn_pre;
            dgh[g0 + 2 * hidden + j] = dhn_aff;
            dh[o] = dhn * z;
        }

    gemm(W_ih.g.ptr(), dgi.ptr(), c.x.ptr(), H3, in, B, true, false, 1.0, 1.0);
    gemm(W_hh.g.ptr(), dgh.ptr(), c.h.ptr(), H3, hidden, B, true, false, 1.0, 1.0);
    for (int i = 0; i < B; ++i)
        for (int j = 0; j < H3; ++j) {
            b_ih.g[j] += dgi[static_cast<std::size_t>(i) * H3 + j];
            b_hh.g[j] += dgh[static_cast<std::size_t>(i) * H3 + j];
        }

    Tensor dx({B, in});
    gemm(dx.ptr(), dgi.ptr(), W_ih.v.ptr(), B, in, H3, false, false);
    gemm(dh.ptr(), dgh.ptr(), W_hh.v.ptr(), B, hidden, H3, false, false, 1.0, 1.0);
    return {std::move(dx), std::move(dh)};
}

void GruCell::collect(std::vector<Param*>& ps) {
    ps.push_back(&W_ih);
    ps.push_back(&b_ih);
    ps.push_back(&W_hh);
    ps.push_back(&b_hh);
}

}  // namespace fdm
