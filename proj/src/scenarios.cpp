#include "qfc/scenarios.hpp"

#include <cmath>
#include <numbers>
#include <set>

namespace qfc {

namespace {

// Tracks which override keys were consumed so typos fail loudly.
class Overrides {
  public:
    explicit Overrides(const std::map<std::string, double>& kv) : kv_(kv) {}

    double get(const std::string& key, double fallback) {
        used_.insert(key);
        auto it = kv_.find(key);
        return it == kv_.end() ? fallback : it->second;
    }

    void finish(const std::string& scenario) const {
        for (const auto& [key, value] : kv_)
            if (!used_.contains(key))
                throw ValidationError("scenario '" + scenario + "': unknown override '" + key +
                                      "'");
    }

  private:
    const std::map<std::string, double>& kv_;
    std::set<std::string> used_;
};

int int_param(double v, const char* what) {
    const int n = static_cast<int>(std::lround(v));
    if (n < 2) throw ValidationError(std::string(what) + " must be >= 2");
    return n;
}

Eigen::VectorXd moment_observation(const DensityMatrix& rho, const ComplexMatrix& x,
                                   const ComplexMatrix& p, const ComplexMatrix& x2,
                                   const ComplexMatrix& p2) {
    Eigen::VectorXd obs(4);
    obs << expectation(x, rho).real(), expectation(p, rho).real(), expectation(x2, rho).real(),
        expectation(p2, rho).real();
    return obs;
}

// Absorbing boundary for truncated bosonic bases: a lowering channel active
// only at levels the physical state never populates. Conditional dynamics
// turns any weight parked high in the basis into a rare multiplicative
// blow-up (posterior weights are martingales, and the prize scales with n);
// the absorber removes such weight before it can win that lottery. It acts on
// O(1e-9) tails of legitimate states, and enters truth, filter, and the
// unconditional oracle identically.
ComplexMatrix fock_absorber(int n, int level) {
    ComplexMatrix l = ComplexMatrix::Zero(n, n);
    for (int k = std::max(1, level); k < n; ++k) l(k - 1, k) = std::sqrt(static_cast<double>(k));
    return l;
}

ScenarioSpec build_qubit(Overrides& ov) {
    ScenarioSpec s;
    s.name = "qubit";
    s.space = HilbertSpace({2});
    QubitParams qp;
    qp.epsilon = ov.get("epsilon", 0.1);
    qp.delta = ov.get("delta", 1.0);
    s.h0 = 0.5 * qp.epsilon * pauli_z() + 0.5 * qp.delta * pauli_x();
    s.a = pauli_z();
    s.cfg.kappa = ov.get("kappa", 1.0);
    s.cfg.eta = ov.get("eta", 1.0);
    s.cfg.dt = ov.get("dt", 1e-3 / s.cfg.kappa);
    s.initial_true = DensityMatrix::basis_state(2, 1);  // excited
    s.estimator_init = DensityMatrix::maximally_mixed(2);
    s.ops["sx"] = pauli_x();
    s.ops["sy"] = pauli_y();
    s.ops["sz"] = pauli_z();
    s.control_names = {"u"};
    s.control_bounds = {1.0};
    const ComplexMatrix sx = pauli_x();
    s.control_hamiltonian = [sx](const ControlSignal& u) -> ComplexMatrix {
        return u.values[0] * sx;
    };
    const ComplexMatrix sy = pauli_y(), sz = pauli_z();
    s.observation_dim = 3;
    s.observation = [sx, sy, sz](const DensityMatrix& rho) {
        Eigen::VectorXd obs(3);
        obs << expectation(sx, rho).real(), expectation(sy, rho).real(),
            expectation(sz, rho).real();
        return obs;
    };
    s.default_est_steps = static_cast<int>(std::lround(15.0 / s.cfg.dt / s.cfg.kappa));
    s.default_control_steps = 5000;
    return s;
}

ScenarioSpec build_oscillator(Overrides& ov, bool quartic) {
    ScenarioSpec s;
    // Both bases keep the truncation edge well above the occupied levels;
    // measurement noise amplifies any weight parked at the edge, so the edge
    // must stay out of reach of the hot early phase.
    const int n = int_param(ov.get("n", 40), "n");
    s.name = quartic ? "quartic" : "qho";
    s.space = HilbertSpace({n});
    auto [x, p] = quadrature_operators(n);
    const ComplexMatrix x2 = x * x, p2 = p * p;
    if (quartic) {
        const double mass = ov.get("mass", 1.0 / std::numbers::pi);
        const double lam = ov.get("lambda", std::numbers::pi / 25.0);
        // The x^4 tail of the truncated basis carries energies ~lambda(2n)^2
        // with no population; cap it so the explicit stepper stays stable.
        const double e_cap = ov.get("e_cap", 40.0);
        s.h0 = cap_spectrum(p2 / (2.0 * mass) + lam * x2 * x2, e_cap);
        s.cfg.kappa = ov.get("kappa", 0.1);
        s.cfg.dt = ov.get("dt", 5e-3);
        s.initial_true = DensityMatrix::pure(coherent_state(n, ov.get("alpha0", 1.06)));
        s.default_est_steps = 2000;
        s.default_control_steps = 3000;
    } else {
        const double mass = ov.get("mass", 1.0);
        const double omega = ov.get("omega", 1.0);
        s.h0 = p2 / (2.0 * mass) + 0.5 * mass * omega * omega * x2;
        s.cfg.kappa = ov.get("kappa", 0.05);
        s.cfg.dt = ov.get("dt", 2.5e-3);
        s.initial_true = DensityMatrix::pure(coherent_state(n, ov.get("alpha0", 2.0)));
        s.default_est_steps = 8000;
        s.default_control_steps = 20000;
    }
    s.a = x;
    s.cfg.eta = ov.get("eta", 1.0);
    const double abs_rate = ov.get("absorber_rate", 10.0);
    const int abs_level = int_param(ov.get("absorber_level", n - 12), "absorber_level");
    if (abs_rate > 0) s.cfg.extra_dissipators.push_back({fock_absorber(n, abs_level), abs_rate});
    s.estimator_init = DensityMatrix::maximally_mixed(n);
    s.target = ground_state_of(s.h0);
    auto [a_op, adag_op] = ladder_operators(n);
    s.ops["x"] = x;
    s.ops["p"] = p;
    s.ops["num"] = adag_op * a_op;
    s.control_names = {"u"};
    s.control_bounds = {2.0};
    s.control_hamiltonian = [p](const ControlSignal& u) -> ComplexMatrix {
        return u.values[0] * p;
    };
    s.observation_dim = 4;
    s.observation = [x, p, x2, p2](const DensityMatrix& rho) {
        return moment_observation(rho, x, p, x2, p2);
    };
    return s;
}

ScenarioSpec build_two_qubit(Overrides& ov) {
    ScenarioSpec s;
    s.name = "two_qubit";
    s.space = HilbertSpace({2, 2});
    s.h0 = ComplexMatrix::Zero(4, 4);
    s.a = s.space.embed(pauli_z(), 0) + s.space.embed(pauli_z(), 1);  // F_z
    s.cfg.kappa = ov.get("kappa", 0.1);
    s.cfg.eta = ov.get("eta", 0.5);
    s.cfg.dt = ov.get("dt", 5e-3);
    s.initial_true = DensityMatrix::maximally_mixed(4);
    s.estimator_init = DensityMatrix::maximally_mixed(4);
    s.target = two_qubit_target_state(TwoQubitTarget::antisymmetric);
    const ComplexMatrix sy1 = s.space.embed(pauli_y(), 0);
    const ComplexMatrix sy2 = s.space.embed(pauli_y(), 1);
    s.ops["sy1"] = sy1;
    s.ops["sy2"] = sy2;
    s.ops["fz"] = s.a;
    s.control_names = {"u1", "u2"};
    s.control_bounds = {4.0, 4.0};
    s.control_hamiltonian = [sy1, sy2](const ControlSignal& u) -> ComplexMatrix {
        return u.values[0] * sy1 + u.values[1] * sy2;
    };
    s.observation_dim = 32;
    s.observation = [](const DensityMatrix& rho) {
        Eigen::VectorXd obs(32);
        int k = 0;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                obs(k++) = rho.mat(i, j).real();
                obs(k++) = rho.mat(i, j).imag();
            }
        return obs;
    };
    s.default_est_steps = 2000;
    s.default_control_steps = 30000;
    return s;
}

ScenarioSpec build_cqed(Overrides& ov) {
    ScenarioSpec s;
    s.name = "cqed";
    // The driven cavity orbit reaches |alpha| ~ 2*drive/chi; n covers it over
    // the default estimation horizon with room for measurement heating.
    const int n = int_param(ov.get("n", 22), "n");
    s.space = HilbertSpace({2, n});
    CqedParams cp;
    cp.g = ov.get("g", 1.0);
    cp.detuning = ov.get("detuning", 10.0 * cp.g);
    cp.kappa = ov.get("kappa", 0.2 * cp.g);
    cp.chi = ov.get("chi", cp.kappa / 2.0);
    cp.drive = ov.get("drive", 0.173 * cp.g);
    cp.gamma = ov.get("gamma", 1e-4 * cp.g);
    cp.gamma_phi = ov.get("gamma_phi", 1e-4 * cp.g);

    s.h0 = dispersive_hamiltonian(cp, n);
    auto [xc, pc] = quadrature_operators(n);
    s.a = s.space.embed(xc, 1);
    s.cfg.kappa = cp.kappa;
    s.cfg.eta = ov.get("eta", 1.0);
    s.cfg.dt = ov.get("dt", 2.5e-3);
    const ComplexMatrix sz = s.space.embed(pauli_z(), 0);
    s.cfg.extra_dissipators.push_back({s.space.embed(sigma_minus(), 0), cp.gamma});
    s.cfg.extra_dissipators.push_back({sz, cp.gamma_phi / 2.0});
    const double abs_rate = ov.get("absorber_rate", 10.0);
    const int abs_level = int_param(ov.get("absorber_level", n - 4), "absorber_level");
    if (abs_rate > 0)
        s.cfg.extra_dissipators.push_back({s.space.embed(fock_absorber(n, abs_level), 1), abs_rate});

    // Truth prepared excited (sigma_z = |g><g| - |e><e|, so excited = index 1),
    // cavity in vacuum; estimator in an equal qubit superposition.
    ComplexVector qe = ComplexVector::Zero(2);
    qe(1) = 1.0;
    ComplexVector vac = ComplexVector::Zero(n);
    vac(0) = 1.0;
    ComplexVector plus(2);
    plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    auto tensor = [](const ComplexVector& u, const ComplexVector& v) {
        ComplexVector out(u.size() * v.size());
        for (Eigen::Index i = 0; i < u.size(); ++i)
            out.segment(i * v.size(), v.size()) = u(i) * v;
        return out;
    };
    s.initial_true = DensityMatrix::pure(tensor(qe, vac));
    s.estimator_init = DensityMatrix::pure(tensor(plus, vac));
    ComplexVector qg = ComplexVector::Zero(2);
    qg(0) = 1.0;
    s.target = DensityMatrix::pure(tensor(qg, vac));

    s.ops["sz"] = sz;
    s.ops["pulse"] = s.space.embed(pauli_x(), 0);
    s.ops["x_c"] = s.a;
    auto [ac, acd] = ladder_operators(n);
    s.ops["num_c"] = s.space.embed((acd * ac).eval(), 1);
    s.observation_dim = 3;
    const ComplexMatrix xfull = s.a;
    const ComplexMatrix pfull = s.space.embed(pc, 1);
    s.observation = [sz, xfull, pfull](const DensityMatrix& rho) {
        Eigen::VectorXd obs(3);
        obs << expectation(sz, rho).real(), expectation(xfull, rho).real(),
            expectation(pfull, rho).real();
        return obs;
    };
    s.default_est_steps = 5600;
    s.default_control_steps = 400;
    return s;
}

ScenarioSpec build_fock_cavity(Overrides& ov) {
    ScenarioSpec s;
    s.name = "fock_cavity";
    const int n = int_param(ov.get("n", 15), "n");
    s.space = HilbertSpace({n});
    const double kappa_n = ov.get("kappa_n", 0.1);
    s.h0 = ComplexMatrix::Zero(n, n);
    auto [a_op, adag_op] = ladder_operators(n);
    s.a = adag_op * a_op;  // number operator; channel list is authoritative
    s.cfg.kappa = kappa_n;
    s.cfg.eta = ov.get("eta", 1.0);
    s.cfg.dt = ov.get("dt", 1e-3);
    for (int k = 0; k < n; ++k) {
        ComplexMatrix pk = ComplexMatrix::Zero(n, n);
        pk(k, k) = 1.0;
        s.channels.push_back({pk, kappa_n});
    }
    s.initial_true = DensityMatrix::basis_state(n, 0);
    s.estimator_init = DensityMatrix::maximally_mixed(n);
    ComplexVector code = ComplexVector::Zero(n);
    code(1) = 1.0 / std::sqrt(2.0);
    code(3) = 1.0 / std::sqrt(2.0);
    s.target = DensityMatrix::pure(code);
    s.ops["num"] = s.a;
    s.control_names = {"alpha_re", "alpha_im"};
    s.control_bounds = {2.0, 2.0};
    const ComplexMatrix aop = a_op, adop = adag_op;
    s.control_hamiltonian = [aop, adop](const ControlSignal& u) -> ComplexMatrix {
        // Hermitian displacement drive i(alpha a† - alpha* a).
        const Complex alpha(u.values[0], u.values[1]);
        return Complex(0, 1) * (alpha * adop - std::conj(alpha) * aop);
    };
    s.observation_dim = n + 2;
    s.observation = [aop, n](const DensityMatrix& rho) {
        Eigen::VectorXd obs(n + 2);
        for (int k = 0; k < n; ++k) obs(k) = rho.mat(k, k).real();
        const Complex mean_a = expectation(aop, rho);
        obs(n) = mean_a.real();
        obs(n + 1) = mean_a.imag();
        return obs;
    };
    s.default_est_steps = 2000;
    s.default_control_steps = 2000;
    return s;
}

ScenarioSpec build_double_well(Overrides& ov) {
    ScenarioSpec s;
    s.name = "double_well";
    const int n = int_param(ov.get("n", 60), "n");
    s.space = HilbertSpace({n});
    const double alpha = ov.get("alpha", 4.0);
    const double beta = ov.get("beta", 0.4);
    if (alpha <= 0 || beta <= 0) throw ValidationError("double_well: alpha, beta must be > 0");
    auto [x, p] = quadrature_operators(n);
    const double e_cap = ov.get("e_cap", 60.0);
    s.h0 = cap_spectrum(0.5 * p * p + double_well_potential(alpha, beta, n), e_cap);
    // x^2 scaled by the squared well position so the measured signal is O(1);
    // also keeps the Euler noise term well inside its stability margin.
    const double x_well_sq = alpha / (2.0 * beta);
    const ComplexMatrix x2 = x * x;
    s.a = x2 / x_well_sq;
    s.cfg.kappa = ov.get("kappa", 0.1);
    s.cfg.eta = ov.get("eta", 1.0);
    s.cfg.dt = ov.get("dt", 2.5e-3);
    s.initial_true = DensityMatrix::basis_state(n, 0);
    s.estimator_init = DensityMatrix::maximally_mixed(n);
    s.target = ground_state_of(s.h0);
    const double abs_rate = ov.get("absorber_rate", 10.0);
    const int abs_level = int_param(ov.get("absorber_level", n - 15), "absorber_level");
    if (abs_rate > 0) s.cfg.extra_dissipators.push_back({fock_absorber(n, abs_level), abs_rate});
    auto [a_op, adag_op] = ladder_operators(n);
    const ComplexMatrix squeeze = Complex(0, 1) * (adag_op * adag_op - a_op * a_op);
    s.ops["x"] = x;
    s.ops["p"] = p;
    s.ops["x2"] = x2;
    s.ops["squeeze"] = squeeze;
    s.control_names = {"u"};
    s.control_bounds = {1.0};
    s.control_hamiltonian = [squeeze](const ControlSignal& u) -> ComplexMatrix {
        return u.values[0] * squeeze;
    };
    s.observation_dim = n;
    s.observation = [n](const DensityMatrix& rho) {
        Eigen::VectorXd obs(n);
        for (int k = 0; k < n; ++k) obs(k) = rho.mat(k, k).real();
        return obs;
    };
    s.default_est_steps = 800;
    s.default_control_steps = 1600;
    return s;
}

}  // namespace

std::vector<std::string> scenario_names() {
    return {"qubit", "qho", "quartic", "two_qubit", "cqed", "fock_cavity", "double_well"};
}

ScenarioSpec build_scenario(const std::string& name,
                            const std::map<std::string, double>& overrides) {
    Overrides ov(overrides);
    ScenarioSpec s;
    if (name == "qubit")
        s = build_qubit(ov);
    else if (name == "qho")
        s = build_oscillator(ov, false);
    else if (name == "quartic")
        s = build_oscillator(ov, true);
    else if (name == "two_qubit")
        s = build_two_qubit(ov);
    else if (name == "cqed")
        s = build_cqed(ov);
    else if (name == "fock_cavity")
        s = build_fock_cavity(ov);
    else if (name == "double_well")
        s = build_double_well(ov);
    else
        throw ValidationError("unknown scenario '" + name + "'");
    ov.finish(name);

    if (!is_hermitian(s.h0, 1e-9)) throw ValidationError(name + ": H0 not Hermitian");
    if (!is_hermitian(s.a, 1e-9)) throw ValidationError(name + ": A not Hermitian");
    if (s.h0.rows() != s.space.dim() || s.a.rows() != s.space.dim())
        throw ValidationError(name + ": operator dims inconsistent with space");
    s.cfg.validate();
    return s;
}

ComplexMatrix double_well_potential(double alpha, double beta, int n) {
    if (alpha <= 0 || beta <= 0) throw ValidationError("double_well_potential: need alpha, beta > 0");
    auto [x, p] = quadrature_operators(n);
    const ComplexMatrix x2 = x * x;
    ComplexMatrix v = -alpha * x2 + beta * x2 * x2;
    // Guard: the low doublet of p^2/2 + V must stay away from the truncation
    // edge, otherwise the chosen (alpha, beta, n) are meaningless.
    const ComplexMatrix h = 0.5 * p * p + v;
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitize(h));
    for (int k = 0; k < 2; ++k) {
        const double leak = std::norm(es.eigenvectors()(n - 1, k)) +
                            std::norm(es.eigenvectors()(n - 2, k));
        if (leak > 1e-6)
            throw ValidationError("double_well_potential: doublet leaks into truncation edge");
    }
    return v;
}

ComplexMatrix jc_hamiltonian(const CqedParams& p, int n_cavity) {
    HilbertSpace space({2, n_cavity});
    auto [a_op, adag_op] = ladder_operators(n_cavity);
    const ComplexMatrix sz = space.embed(pauli_z(), 0);
    const ComplexMatrix sm = space.embed(sigma_minus(), 0);
    const ComplexMatrix sp = sm.adjoint();
    const ComplexMatrix ac = space.embed(a_op, 1);
    const ComplexMatrix acd = space.embed(adag_op, 1);
    return 0.5 * p.detuning * sz + p.g * (sp * ac + acd * sm) + p.drive * (ac + acd);
}

ComplexMatrix dispersive_hamiltonian(const CqedParams& p, int n_cavity) {
    HilbertSpace space({2, n_cavity});
    auto [a_op, adag_op] = ladder_operators(n_cavity);
    const ComplexMatrix sz = space.embed(pauli_z(), 0);
    const ComplexMatrix num = space.embed((adag_op * a_op).eval(), 1);
    const ComplexMatrix xdrive = space.embed(((a_op + adag_op)).eval(), 1);
    return 0.5 * (p.detuning + p.chi) * sz + p.chi * sz * num + p.drive * xdrive;
}

DensityMatrix ground_state_of(const ComplexMatrix& h) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitize(h));
    return DensityMatrix::pure(es.eigenvectors().col(0));
}

TrajectoryState multi_channel_step(const TrajectoryState& state,
                                   const std::vector<MeasurementChannel>& channels,
                                   const ComplexMatrix& h_total, const SmeConfig& cfg,
                                   const std::vector<double>& dw_vector) {
    if (dw_vector.size() != channels.size())
        throw DimensionError("multi_channel_step: one dW per channel required");
    const ComplexMatrix& rho = state.rho.mat;
    const Complex mi(0, -1);
    ComplexMatrix next = rho + cfg.dt * (mi * (h_total * rho - rho * h_total));
    for (std::size_t c = 0; c < channels.size(); ++c) {
        const auto& [pn, rate] = channels[c];
        const ComplexMatrix pn_rho = pn * rho;
        const ComplexMatrix rho_pn = rho * pn;
        const double mean = pn_rho.trace().real();
        next += 0.5 * rate * cfg.dt *
                (pn_rho * pn - 0.5 * (pn * pn_rho + rho_pn * pn));
        next += std::sqrt(0.5 * rate) * dw_vector[c] * (pn_rho + rho_pn - 2.0 * mean * rho);
    }
    TrajectoryState out;
    out.rho = DensityMatrix::unchecked(std::move(next));
    repair_state(out.rho.mat);
    out.t = state.t + cfg.dt;
    return out;
}

}  // namespace qfc
