#include "qfc/hilbert.hpp"

#include <cmath>

namespace qfc {

ComplexMatrix pauli_x() {
    ComplexMatrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

ComplexMatrix pauli_y() {
    ComplexMatrix m(2, 2);
    m << 0, Complex(0, -1), Complex(0, 1), 0;
    return m;
}

ComplexMatrix pauli_z() {
    ComplexMatrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

ComplexMatrix sigma_minus() {
    ComplexMatrix m = ComplexMatrix::Zero(2, 2);
    m(0, 1) = 1;
    return m;
}

bool is_finite(const ComplexMatrix& m) {
    return m.allFinite();
}

bool is_hermitian(const ComplexMatrix& m, double tol) {
    if (m.rows() != m.cols()) return false;
    return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.rows() != a.cols() || b.rows() != b.cols())
        throw DimensionError("kron: operands must be square");
    const Eigen::Index na = a.rows(), nb = b.rows();
    ComplexMatrix out(na * nb, na * nb);
    for (Eigen::Index i = 0; i < na; ++i)
        for (Eigen::Index j = 0; j < na; ++j)
            out.block(i * nb, j * nb, nb, nb) = a(i, j) * b;
    return out;
}

ComplexMatrix HilbertSpace::embed(const ComplexMatrix& op, std::size_t index) const {
    if (index >= factor_dims.size())
        throw DimensionError("HilbertSpace::embed: factor index out of range");
    if (op.rows() != factor_dims[index])
        throw DimensionError("HilbertSpace::embed: operator dim does not match factor");
    ComplexMatrix out = identity(1);
    for (std::size_t k = 0; k < factor_dims.size(); ++k)
        out = kron(out, k == index ? op : identity(factor_dims[k]));
    return out;
}

DensityMatrix DensityMatrix::validated(ComplexMatrix m) {
    DensityMatrix rho;
    rho.mat = std::move(m);
    rho.check();
    return rho;
}

DensityMatrix DensityMatrix::basis_state(int n, int k) {
    ComplexMatrix m = ComplexMatrix::Zero(n, n);
    m(k, k) = 1;
    return unchecked(std::move(m));
}

DensityMatrix DensityMatrix::pure(const ComplexVector& psi) {
    ComplexVector v = psi / psi.norm();
    return unchecked(v * v.adjoint());
}

DensityMatrix DensityMatrix::maximally_mixed(int n) {
    return unchecked(ComplexMatrix::Identity(n, n) / static_cast<double>(n));
}

void DensityMatrix::check() const {
    if (mat.rows() != mat.cols())
        throw ValidationError("DensityMatrix: not square");
    if (!is_finite(mat))
        throw ValidationError("DensityMatrix: non-finite entries");
    if (!is_hermitian(mat, kHermTol))
        throw ValidationError("DensityMatrix: not Hermitian within tolerance");
    if (std::abs(mat.trace().real() - 1.0) > kTraceTol || std::abs(mat.trace().imag()) > kTraceTol)
        throw ValidationError("DensityMatrix: trace != 1 within tolerance");
    const double p = mat.cwiseAbs2().sum();  // Tr[rho^2] for Hermitian rho
    const double lo = 1.0 / static_cast<double>(mat.rows()) - kPurityTol;
    if (p < lo || p > 1.0 + kPurityTol)
        throw ValidationError("DensityMatrix: purity out of [1/dim, 1]");
}

Complex expectation(const ComplexMatrix& op, const DensityMatrix& rho) {
    if (op.rows() != rho.mat.rows() || op.cols() != rho.mat.cols())
        throw DimensionError("expectation: operator/state dimension mismatch");
    // Tr[op rho] = sum_ij op_ij rho_ji without forming the product.
    return (op.transpose().cwiseProduct(rho.mat)).sum();
}

double purity(const DensityMatrix& rho) {
    return rho.mat.cwiseAbs2().sum();
}

ComplexMatrix psd_sqrt(const ComplexMatrix& m) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m);
    if (es.info() != Eigen::Success)
        throw ValidationError("psd_sqrt: eigendecomposition failed");
    Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
}

double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
    if (rho.dim() != sigma.dim())
        throw DimensionError("fidelity: dimension mismatch");
    // Integrator states can carry small signed eigenvalue excursions;
    // sanitize so the result stays in [0, 1]. Valid states pass unchanged.
    const ComplexMatrix rho_c = purity(rho) > 1.0 + 1e-12 ? clip_to_psd(rho.mat) : rho.mat;
    const ComplexMatrix sig_c =
        purity(sigma) > 1.0 + 1e-12 ? clip_to_psd(sigma.mat) : sigma.mat;
    const ComplexMatrix s = psd_sqrt(rho_c);
    ComplexMatrix inner = s * sig_c * s;
    inner = hermitize(inner);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(inner, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw ValidationError("fidelity: eigendecomposition failed (non-PSD input?)");
    const double root_sum = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    return std::min(root_sum * root_sum, 1.0 + 1e-9);
}

double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma) {
    if (rho.dim() != sigma.dim())
        throw DimensionError("trace_distance: dimension mismatch");
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(rho.mat - sigma.mat, Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

void repair_state(ComplexMatrix& rho) {
    rho = hermitize(rho);
    const double tr = rho.trace().real();
    if (!(tr > 0.0) || !rho.allFinite())
        throw PositivityError("state trace lost positivity (dt too large?)");
    rho /= tr;
    // Cheap guards; a legitimate state has purity <= 1 + O(excursion^2) and
    // entries bounded by ~1, so tripping these means the step went wrong.
    const double pur = rho.cwiseAbs2().sum();
    double min_diag = 0.0;
    for (Eigen::Index i = 0; i < rho.rows(); ++i)
        min_diag = std::min(min_diag, rho(i, i).real());
    if (pur <= 1.002 && min_diag >= kPsdClip && rho.cwiseAbs().maxCoeff() <= 1.5) return;
    spectral_guard(rho);
}

void spectral_guard(ComplexMatrix& rho, double clip_tol) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> only(rho, Eigen::EigenvaluesOnly);
    if (only.info() != Eigen::Success)
        throw ValidationError("spectral_guard: eigendecomposition failed");
    const double min_eig = only.eigenvalues().minCoeff();
    if (min_eig >= -std::abs(clip_tol)) return;
    if (min_eig < kPsdAbort)
        throw PositivityError("state eigenvalue " + std::to_string(min_eig) +
                              " below abort threshold (dt too large?)");
    rho = clip_to_psd(rho);
}

ComplexMatrix clip_to_psd(const ComplexMatrix& rho) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitize(rho));
    Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
    ComplexMatrix out = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
    out /= out.trace().real();
    return out;
}

ComplexMatrix cap_spectrum(const ComplexMatrix& h, double e_max) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitize(h));
    if (es.info() != Eigen::Success)
        throw ValidationError("cap_spectrum: eigendecomposition failed");
    Eigen::VectorXd lam = es.eigenvalues().cwiseMin(e_max);
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
}

LadderPair ladder_operators(int n) {
    if (n < 2) throw ValidationError("ladder_operators: need n >= 2");
    ComplexMatrix a = ComplexMatrix::Zero(n, n);
    for (int i = 1; i < n; ++i) a(i - 1, i) = std::sqrt(static_cast<double>(i));
    return {a, a.adjoint()};
}

QuadraturePair quadrature_operators(int n) {
    auto [a, adag] = ladder_operators(n);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    return {inv_sqrt2 * (a + adag), Complex(0, 1) * inv_sqrt2 * (adag - a)};
}

ComplexVector coherent_state(int n, Complex alpha) {
    ComplexVector psi(n);
    psi(0) = 1.0;
    for (int k = 1; k < n; ++k) psi(k) = psi(k - 1) * alpha / std::sqrt(static_cast<double>(k));
    return psi / psi.norm();
}

DensityMatrix random_pure_state(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    ComplexVector psi(n);
    for (int i = 0; i < n; ++i) psi(i) = Complex(gauss(rng), gauss(rng));
    return DensityMatrix::pure(psi);
}

DensityMatrix random_density_matrix(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    ComplexMatrix g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g(i, j) = Complex(gauss(rng), gauss(rng));
    ComplexMatrix rho = g * g.adjoint();
    rho /= rho.trace().real();
    return DensityMatrix::unchecked(std::move(rho));
}

ComplexMatrix random_hermitian(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    ComplexMatrix g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g(i, j) = Complex(gauss(rng), gauss(rng));
    return hermitize(g);
}

double top_two_population(const DensityMatrix& rho) {
    const int n = rho.dim();
    return rho.mat(n - 1, n - 1).real() + rho.mat(n - 2, n - 2).real();
}

}  // namespace qfc
