#pragma once

#include "fdm/rng.hpp"
#include "fdm/tensor.hpp"

#include <array>
#include <utility>
#include <vector>

namespace fdm {

// Layers own their parameters and a LIFO stack of forward caches; backward
// calls must mirror forward calls in exact reverse order. clear_caches()
// drops any leftovers between batches.

struct Dense {
    int in = 0, out = 0;
    Param W, b;  // W: [out, in]

    Dense() = default;
    Dense(std::string name, int in_dim, int out_dim, Rng& rng);

    Tensor forward(const Tensor& x, bool cache = true);  // x: [B, in] -> [B, out]
    Tensor backward(const Tensor& dy);            // -> dx
    void collect(std::vector<Param*>& ps);
    void clear_caches() { cache_x_.clear(); }

private:
    std::vector<Tensor> cache_x_;
};

struct LeakyRelu {
    double slope = 0.01;

    Tensor forward(const Tensor& x, bool cache = true);
    Tensor backward(const Tensor& dy);
    void clear_caches() { cache_x_.clear(); }

private:
    std::vector<Tensor> cache_x_;
};

struct Sigmoid {
    Tensor forward(const Tensor& x, bool cache = true);
    Tensor backward(const Tensor& dy);
    void clear_caches() { cache_y_.clear(); }

private:
    std::vector<Tensor> cache_y_;
};

struct Tanh {
    Tensor forward(const Tensor& x, bool cache = true);
    Tensor backward(const Tensor& dy);
    void clear_caches() { cache_y_.clear(); }

private:
    std::vector<Tensor> cache_y_;
};

// Inverted dropout: active only when train = true.
struct Dropout {
    double p = 0.2;

    explicit Dropout(double prob = 0.2) : p(prob) {}

    Tensor forward(const Tensor& x, bool train, Rng& rng, bool cache = true);
    Tensor backward(const Tensor& dy);
    void clear_caches() {
        cache_mask_.clear();
        cache_active_.clear();
    }

private:
    std::vector<Tensor> cache_mask_;
    std::vector<bool> cache_active_;
};

// Valid 2D convolution with stride, im2col-backed.
struct Conv2d {
    int cin = 0, cout = 0, kh = 0, kw = 0, stride = 1;
    Param W, b;  // W: [cout, cin*kh*kw]

    Conv2d() = default;
    Conv2d(std::string name, int cin_, int cout_, int k, int stride_, Rng& rng);

    static int out_extent(int in, int k, int stride) { return (in - k) / stride + 1; }

    Tensor forward(const Tensor& x, bool cache = true);  // x: [B, cin, H, W]
    Tensor backward(const Tensor& dy);  // -> dx
    void collect(std::vector<Param*>& ps);
    void clear_caches() {
        cache_col_.clear();
        cache_dims_.clear();
    }

private:
    std::vector<Tensor> cache_col_;
    std::vector<std::array<int, 3>> cache_dims_;  // B, H, W
};

// Max pooling with implicit -inf padding.
struct MaxPool {
    int k = 3, stride = 2, pad = 1;

    Tensor forward(const Tensor& x, bool cache = true);  // x: [B, C, H, W]
    Tensor backward(const Tensor& dy);  // -> dx
    void clear_caches() {
        cache_arg_.clear();
        cache_dims_.clear();
    }

private:
    std::vector<std::vector<std::int64_t>> cache_arg_;
    std::vector<std::array<int, 4>> cache_dims_;  // B, C, H, W
};

// Single GRU cell, gate order r, z, n in the stacked 3H dimension:
//   r = sig(x Wir' + bir + h Whr' + bhr)
//   z = sig(x Wiz' + biz + h Whz' + bhz)
//   n = tanh(x Win' + bin + r o (h Whn' + bhn))
//   h' = (1 - z) o n + z o h
struct GruCell {
    int in = 0, hidden = 0;
    Param W_ih, b_ih;  // [3H, in], [3H]
    Param W_hh, b_hh;  // [3H, H], [3H]

    GruCell() = default;
    GruCell(std::string name, int in_dim, int hidden_dim, Rng& rng);

    Tensor forward(const Tensor& x, const Tensor& h, bool cache = true);  // -> h' [B, H]
    // Returns (dx, dh) for the mirrored forward call.
    std::pair<Tensor, Tensor> backward(const Tensor& dh_next);
    void collect(std::vector<Param*>& ps);
    void clear_caches() { caches_.clear(); }

private:
    struct Cache {
        Tensor x, h, r, z, n, hn_aff;
    };
    std::vector<Cache> caches_;
};

// Elementwise helpers shared by layers and the model head.
void sigmoid_inplace(Tensor& t);
void tanh_inplace(Tensor& t);

}  // namespace fdm
