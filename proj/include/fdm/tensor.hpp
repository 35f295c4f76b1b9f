#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace fdm {

// Dense row-major f64 tensor, rank <= 4.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        data.assign(static_cast<std::size_t>(numel_of(shape)), 0.0);
    }

    static std::int64_t numel_of(const std::vector<int>& s) {
        std::int64_t n = 1;
        for (int e : s) {
            if (e <= 0) throw std::invalid_argument("tensor extents must be positive");
            n *= e;
        }
        return n;
    }
    static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }

    std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
    int rank() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[i]; }

    double* ptr() { return data.data(); }
    const double* ptr() const { return data.data(); }

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }
    void reshape(std::vector<int> s) {
        if (numel_of(s) != numel()) throw std::invalid_argument("reshape changes element count");
        shape = std::move(s);
    }
};

// C[M,N] = alpha * op(A) * op(B) + beta * C, row-major raw buffers.
void gemm(double* C, const double* A, const double* B, int M, int N, int K, bool transA,
          bool transB, double alpha = 1.0, double beta = 0.0);

// Named parameter with accumulated gradient.
struct Param {
    std::string name;
    Tensor v;
    Tensor g;

    Param() = default;
    Param(std::string n, std::vector<int> shape)
        : name(std::move(n)), v(shape), g(shape) {}
    void zero_grad() { g.fill(0.0); }
};

}  // namespace fdm
