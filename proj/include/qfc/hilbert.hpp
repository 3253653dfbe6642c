// Dense complex linear algebra and quantum-state primitives for small
// Hilbert spaces (dims up to a few hundred, dense storage only).
#pragma once

#include <complex>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qfc {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

// Tolerances shared across the state-validity checks.
inline constexpr double kHermTol = 1e-10;
inline constexpr double kTraceTol = 1e-10;
inline constexpr double kPurityTol = 1e-9;
// Euler steps on a near-pure state routinely produce transient eigenvalues
// of order -kappa*dt*(xi^2-1) (xi the unit normal draw); those excursions are
// signed and average out, and clipping them every step would inject
// excited-state weight at an O(kappa) rate that does not vanish with dt.
// They are left alone. Excursions beyond kPsdClip are rare tail events and
// get clipped; beyond kPsdAbort the step size is genuinely too large and the
// run aborts.
inline constexpr double kPsdClip = -0.02;
inline constexpr double kPsdAbort = -0.2;

struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Signals an eigenvalue below the abort threshold, i.e. the step size is too
// large for the dynamics (or the record does not match the model).
struct PositivityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Ordered tensor factors of a composite space, e.g. {2,2} for two qubits or
// {2,N} for qubit (x) cavity.
struct HilbertSpace {
    std::vector<int> factor_dims;

    HilbertSpace() = default;
    explicit HilbertSpace(std::vector<int> dims) : factor_dims(std::move(dims)) {
        for (int d : factor_dims)
            if (d < 1) throw ValidationError("HilbertSpace: factor dim < 1");
    }

    int dim() const {
        int n = 1;
        for (int d : factor_dims) n *= d;
        return n;
    }

    // op acting on factor `index`, identity elsewhere.
    ComplexMatrix embed(const ComplexMatrix& op, std::size_t index) const;
};

inline ComplexMatrix identity(int n) { return ComplexMatrix::Identity(n, n); }

ComplexMatrix pauli_x();
ComplexMatrix pauli_y();
ComplexMatrix pauli_z();

// sigma_- = |0><1| in the {|0>,|1>} basis where sigma_z = diag(+1,-1).
ComplexMatrix sigma_minus();

bool is_finite(const ComplexMatrix& m);
bool is_hermitian(const ComplexMatrix& m, double tol = kHermTol);

inline ComplexMatrix hermitize(const ComplexMatrix& m) {
    return 0.5 * (m + m.adjoint().eval());
}

inline ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b) {
    return a * b - b * a;
}

// Kronecker (tensor) product of two square operators.
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

// A density matrix with its validity contract: Hermitian, unit trace, and
// purity within [1/dim, 1] (both up to tolerance).
struct DensityMatrix {
    ComplexMatrix mat;

    DensityMatrix() = default;

    // Validating constructor; throws ValidationError on contract violation.
    static DensityMatrix validated(ComplexMatrix m);
    // For states produced by the integrators, which maintain the invariants
    // themselves.
    static DensityMatrix unchecked(ComplexMatrix m) {
        DensityMatrix rho;
        rho.mat = std::move(m);
        return rho;
    }
    // |k><k| in an n-dimensional space.
    static DensityMatrix basis_state(int n, int k);
    // |psi><psi| for a (not necessarily normalized) ket.
    static DensityMatrix pure(const ComplexVector& psi);
    static DensityMatrix maximally_mixed(int n);

    int dim() const { return static_cast<int>(mat.rows()); }
    void check() const;  // throws ValidationError if the contract is broken
};

// Tr[op rho]; imaginary part is <= 1e-10 when op is Hermitian.
Complex expectation(const ComplexMatrix& op, const DensityMatrix& rho);
inline double expectation_real(const ComplexMatrix& op, const DensityMatrix& rho) {
    return expectation(op, rho).real();
}

double purity(const DensityMatrix& rho);

// Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2; reduces to
// Tr[rho sigma] when either state is pure.
double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma);

// Half the sum of absolute eigenvalues of rho - sigma.
double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma);

// Principal square root of a PSD Hermitian matrix (negative round-off
// eigenvalues clipped to zero).
ComplexMatrix psd_sqrt(const ComplexMatrix& m);

// Post-step normalization: hermitize and renormalize the trace, with cheap
// O(n^2) guards (purity, entry magnitude, finiteness) that escalate to the
// spectral guard when violated.
void repair_state(ComplexMatrix& rho);

// Spectral check, run on a short step cadence and on guard trips: clips
// excursions below clip_tol (rare at the chosen tolerance, so unbiased) to
// keep multiplicative noise from cascading parked negativity up the basis,
// and aborts below kPsdAbort.
void spectral_guard(ComplexMatrix& rho, double clip_tol = kPsdClip);

// Eigenvalue clip to the PSD cone plus trace renormalization; boundary-input
// preparation, not part of the integrator step.
ComplexMatrix clip_to_psd(const ComplexMatrix& rho);

// Clamp the spectrum of a Hermitian operator from above. Used to tame the
// unphysical top of truncated anharmonic Hamiltonians, whose huge energy gaps
// would otherwise make any explicit stepper unstable; the capped levels carry
// negligible population (the truncation guard checks this).
ComplexMatrix cap_spectrum(const ComplexMatrix& h, double e_max);

// Truncated bosonic ladder operators: a[i-1,i] = sqrt(i). n >= 2.
struct LadderPair {
    ComplexMatrix a;
    ComplexMatrix adag;
};
LadderPair ladder_operators(int n);

// x = (a + a†)/sqrt(2), p = i(a† - a)/sqrt(2) in the same truncated basis.
struct QuadraturePair {
    ComplexMatrix x;
    ComplexMatrix p;
};
QuadraturePair quadrature_operators(int n);

// Truncated coherent state |alpha| (renormalized after truncation).
ComplexVector coherent_state(int n, Complex alpha);

// Haar-ish random pure state (normalized complex Gaussian ket).
DensityMatrix random_pure_state(int n, std::mt19937_64& rng);
// Ginibre random full-rank density matrix.
DensityMatrix random_density_matrix(int n, std::mt19937_64& rng);
// Random Hermitian matrix with entries O(1).
ComplexMatrix random_hermitian(int n, std::mt19937_64& rng);

// Population of the top two levels of a truncated-basis state; used as the
// truncation-leakage guard for bosonic scenarios.
double top_two_population(const DensityMatrix& rho);

}  // namespace qfc
