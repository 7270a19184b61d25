#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace quinv {

using cplx = std::complex<double>;

// Index of the unordered pair {j,k} (0-based, j != k) in the packed pair
// arrays: (0,1),(0,2),...,(0,N-1),(1,2),...
int pair_index(int n_beams, int j, int k);
int pair_count(int n_beams);

// Normal-ordering parameters of a zero-mean N-beam Gaussian field:
//   B_j = <da_j^+ da_j>, C_j = <da_j^2>, D_jk = <da_j da_k>, Dbar_jk = -<da_j^+ da_k>.
// Pair quantities are stored once, for j < k.
struct GaussianStateParams {
    int n_beams = 0;
    std::vector<double> b;
    std::vector<cplx> c;
    std::vector<cplx> d;
    std::vector<cplx> d_bar;

    static GaussianStateParams vacuum(int n_beams);

    // swapped indices: D_kj = D_jk, Dbar_kj = conj(Dbar_jk)
    cplx D(int j, int k) const;
    cplx Dbar(int j, int k) const;
    void set_D(int j, int k, cplx v);
    void set_Dbar(int j, int k, cplx v);

    // throws ValidationError on size mismatch, B < 0 or non-finite entries
    void validate() const;
};

// 2N x 2N symmetric-ordering covariance, ordering (x1,p1,x2,p2,...),
// vacuum variance 1.
struct CovarianceMatrix {
    int n_beams = 0;
    Eigen::MatrixXd m;
};

struct SymplecticSpectrum {
    std::vector<double> nu;       // sorted descending
    double poly_route_dev = 0.0;  // max |nu^2 (eigen route) - root (polynomial route)|
};

CovarianceMatrix build_covariance(const GaussianStateParams& p);
// inverse of build_covariance; the matrix must have the block structure
GaussianStateParams params_from_covariance(const CovarianceMatrix& cm);

Eigen::MatrixXd symplectic_form(int n_beams);

// sum of all principal minors of order 2k of Omega*A
double qui_from_covariance(const CovarianceMatrix& cm, int k);
// Delta^N_1..N, index 0 holds k=1
std::vector<double> all_quis(const CovarianceMatrix& cm);
// sum of principal minors of arbitrary order r of a square matrix
double principal_minor_sum(const Eigen::MatrixXd& a, int r);

SymplecticSpectrum symplectic_eigenvalues(const CovarianceMatrix& cm);
bool is_physical(const CovarianceMatrix& cm, double tol = 1e-9);
CovarianceMatrix partial_transpose(const CovarianceMatrix& cm, int beam);

// conventions for the purity of an N-beam state
double purity_standard(double delta_top);        // 1 / sqrt(Delta^N_N)
double purity_inverse_square(double delta_top);  // Delta^N_N^{-2}

}  // namespace quinv
