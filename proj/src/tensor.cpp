#include "fdm/tensor.hpp"

#include <Eigen/Dense>

namespace fdm {

namespace {
using MatMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
}  // namespace

void gemm(double* C, const double* A, const double* B, int M, int N, int K, bool transA,
          bool transB, double alpha, double beta) {
    MatMap c(C, M, N);
    ConstMatMap a(A, transA ? K : M, transA ? M : K);
    ConstMatMap b(B, transB ? N : K, transB ? K : N);
    if (beta == 0.0) {
        if (!transA && !transB) c.noalias() = alpha * (a * b);
        else if (transA && !transB) c.noalias() = alpha * (a.transpose() * b);
        else if (!transA && transB) c.noalias() = alpha * (a * b.transpose());
        else c.noalias() = alpha * (a.transpose() * b.transpose());
    } else {
        c *= beta;
        if (!transA && !transB) c.noalias() += alpha * (a * b);
        else if (transA && !transB) c.noalias() += alpha * (a.transpose() * b);
        else if (!transA && transB) c.noalias() += alpha * (a * b.transpose());
        else c.noalias() += alpha * (a.transpose() * b.transpose());
    }
}

}  // namespace fdm
