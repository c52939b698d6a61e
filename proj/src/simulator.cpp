#include "mcs/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <random>
#include <thread>

#include "mcs/errors.hpp"

namespace mcs {

namespace {

constexpr long kBatchUnits = 64; // units (paths or antithetic pairs) per RNG stream

std::mt19937_64 make_stream(std::uint64_t master_seed, std::uint64_t batch) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                      static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(batch),
                      static_cast<std::uint32_t>(batch >> 32)};
    return std::mt19937_64(seq);
}

// Runs kern(batch, unit_begin, unit_end) over all batches; bit-identical
// results for any thread count because batches write disjoint slots.
void run_batches(long units, int threads, const std::function<void(long, long, long)>& kern) {
    const long n_batches = (units + kBatchUnits - 1) / kBatchUnits;
    int n_threads = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    if (n_threads < 1) n_threads = 1;
    n_threads = static_cast<int>(std::min<long>(n_threads, n_batches));
    if (n_threads <= 1) {
        for (long b = 0; b < n_batches; ++b)
            kern(b, b * kBatchUnits, std::min(units, (b + 1) * kBatchUnits));
        return;
    }
    std::atomic<long> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mu;
    auto worker = [&]() {
        try {
            for (;;) {
                const long b = next.fetch_add(1);
                if (b >= n_batches || failed.load()) break;
                kern(b, b * kBatchUnits, std::min(units, (b + 1) * kBatchUnits));
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mu);
            if (!first_error) first_error = std::current_exception();
            failed.store(true);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

struct ReportLayout {
    std::vector<int> steps_idx;
    std::vector<double> times;
};

ReportLayout make_reports(const SimConfig& cfg, double T) {
    const int last = cfg.steps - 1;
    const double dt = T / cfg.steps;
    std::vector<int> idx;
    if (cfg.report_times.empty()) {
        for (int k = 1; k <= 10; ++k)
            idx.push_back(std::min(last, (cfg.steps * k) / 10));
    } else {
        for (double t : cfg.report_times) {
            if (t < 0.0 || t > T) throw ConfigError("report time outside [0, T]");
            idx.push_back(std::min(last, static_cast<int>(std::lround(t / dt))));
        }
    }
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    ReportLayout out;
    out.steps_idx = idx;
    for (int k : idx) out.times.push_back(dt * k);
    return out;
}

void init_bundle(PathBundle& b, const SimConfig& cfg, double T, bool stochastic_rate) {
    b.T = T;
    b.x0 = cfg.x0;
    b.steps = cfg.steps;
    b.paths = cfg.paths;
    b.antithetic = cfg.antithetic;
    b.stochastic_rate = stochastic_rate;
    b.scheme = cfg.scheme;
    b.master_seed = cfg.master_seed;
    const auto rl = make_reports(cfg, T);
    b.report_steps = rl.steps_idx;
    b.report_times = rl.times;
    const std::size_t cells =
        static_cast<std::size_t>(cfg.paths) * rl.steps_idx.size();
    b.c.assign(cells, 0.0);
    b.x.assign(cells, 0.0);
    b.c_max.assign(cells, 0.0);
    b.c_min.assign(cells, 0.0);
    b.qv_logc.assign(cells, 0.0);
    if (stochastic_rate) {
        b.r.assign(cells, 0.0);
        b.pred_var.assign(cells, 0.0);
    }
    const std::size_t np = static_cast<std::size_t>(cfg.paths);
    b.terminal_raw.assign(np, 0.0);
    b.terminal_deflated.assign(np, 0.0);
    b.budget_residual.assign(np, 0.0);
    if (cfg.record_full) {
        if (static_cast<double>(cfg.paths) * (cfg.steps + 1) > 5e7)
            throw ConfigError("record_full run too large; reduce paths or steps");
        b.full_x.assign(np * static_cast<std::size_t>(cfg.steps), 0.0);
        b.full_c.assign(np * static_cast<std::size_t>(cfg.steps), 0.0);
        if (stochastic_rate) b.full_r.assign(np * static_cast<std::size_t>(cfg.steps), 0.0);
    }
}

// Precomputed deterministic-market step tables.
struct DetTables {
    double dt = 0.0, sqrt_dt = 0.0;
    int last = 0;
    std::vector<double> lnB;      // 0..last
    std::vector<double> B;        // 0..last
    std::vector<double> dlnB;     // 0..last-1
    std::vector<double> pre_drift; // exact scheme: (r + exc - v^2/2) dt - drain
    std::vector<double> vol_sd;    // |pi sigma| sqrt(dt)
    std::vector<double> drain;     // exact integral of 1/B over the step
    std::vector<double> drain_cum; // 0..last
    std::vector<double> e_drift; // Euler: (r + exc - 1/B) dt
    double budget_residual = 0.0; // path-independent for deterministic factors
};

DetTables build_det_tables(const DeterministicMarket& market, const InvestmentStrategy& pi,
                           const ConsumptionRule& rule, const SimConfig& cfg) {
    if (rule.is_surface()) throw RuleError("deterministic market needs a deterministic rule");
    const double T = market.horizon();
    DetTables tb;
    tb.dt = T / cfg.steps;
    tb.sqrt_dt = std::sqrt(tb.dt);
    tb.last = cfg.steps - 1;
    const RateCurve& f = rule.rate_curve();
    tb.B.resize(static_cast<std::size_t>(tb.last) + 1);
    tb.lnB.resize(static_cast<std::size_t>(tb.last) + 1);
    for (int k = 0; k <= tb.last; ++k) {
        const double t = tb.dt * k;
        tb.B[static_cast<std::size_t>(k)] = rule.factor(t);
        tb.lnB[static_cast<std::size_t>(k)] = std::log(tb.B[static_cast<std::size_t>(k)]);
    }
    tb.dlnB.resize(static_cast<std::size_t>(tb.last));
    tb.pre_drift.resize(static_cast<std::size_t>(tb.last));
    tb.vol_sd.resize(static_cast<std::size_t>(tb.last));
    tb.drain.resize(static_cast<std::size_t>(tb.last));
    tb.e_drift.resize(static_cast<std::size_t>(tb.last));
    tb.drain_cum.assign(static_cast<std::size_t>(tb.last) + 1, 0.0);
    const int n = market.asset_count();
    for (int k = 0; k < tb.last; ++k) {
        const double t = tb.dt * k;
        const double t1 = tb.dt * (k + 1);
        const double r = market.rate(t);
        double exc = 0.0, vol2 = 0.0;
        if (n > 0) {
            const auto w = pi.fractions(t);
            const auto alpha = market.drift(t);
            const auto sig = market.volatility(t);
            for (int i = 0; i < n; ++i) exc += w[static_cast<std::size_t>(i)] *
                                                (alpha[static_cast<std::size_t>(i)] - r);
            for (int j = 0; j < n; ++j) {
                double ps = 0.0;
                for (int i = 0; i < n; ++i)
                    ps += w[static_cast<std::size_t>(i)] *
                          sig[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
                vol2 += ps * ps;
            }
        }
        tb.dlnB[static_cast<std::size_t>(k)] =
            tb.lnB[static_cast<std::size_t>(k) + 1] - tb.lnB[static_cast<std::size_t>(k)];
        // exact drain: int 1/B_f = int f - dln B over the step
        tb.drain[static_cast<std::size_t>(k)] =
            f.integrate(t, t1) - tb.dlnB[static_cast<std::size_t>(k)];
        tb.drain_cum[static_cast<std::size_t>(k) + 1] =
            tb.drain_cum[static_cast<std::size_t>(k)] + tb.drain[static_cast<std::size_t>(k)];
        tb.pre_drift[static_cast<std::size_t>(k)] =
            (r + exc - 0.5 * vol2) * tb.dt - tb.drain[static_cast<std::size_t>(k)];
        tb.vol_sd[static_cast<std::size_t>(k)] = std::sqrt(vol2) * tb.sqrt_dt;
        tb.e_drift[static_cast<std::size_t>(k)] =
            (r + exc - 1.0 / tb.B[static_cast<std::size_t>(k)]) * tb.dt;
    }
    // budget quadrature: c/Y = x0 e^{-drain_cum}/B is deterministic here
    double acc = 0.0;
    for (int k = 0; k <= tb.last; ++k) {
        const double q = std::exp(-tb.drain_cum[static_cast<std::size_t>(k)]) /
                         tb.B[static_cast<std::size_t>(k)];
        acc += (k == 0 || k == tb.last) ? 0.5 * q : q;
    }
    tb.budget_residual = 1.0 - acc * tb.dt;
    return tb;
}

struct PathStats {
    double lmax, lmin, qv, prev_lc;
};

} // namespace

void SimConfig::validate() const {
    if (x0 <= 0.0) throw ConfigError("x0 must be positive");
    if (steps < 2) throw ConfigError("steps must be >= 2");
    if (paths < 1) throw ConfigError("paths must be >= 1");
    if (antithetic && (paths % 2) != 0)
        throw ConfigError("antithetic sampling needs an even path count");
}

PathBundle simulate(const DeterministicMarket& market, const InvestmentStrategy& pi,
                    const ConsumptionRule& rule, const SimConfig& cfg) {
    cfg.validate();
    if (pi.regime() != InvestmentStrategy::Regime::Deterministic)
        throw ConfigError("deterministic market needs a deterministic strategy");
    if (std::abs(rule.horizon() - market.horizon()) > 1e-12)
        throw RuleError("rule horizon does not match the market");
    const DetTables tb = build_det_tables(market, pi, rule, cfg);

    PathBundle bundle;
    init_bundle(bundle, cfg, market.horizon(), false);
    bundle.c0 = cfg.x0 / tb.B[0];

    const int nrep = bundle.n_reports();
    const long unit_paths = cfg.antithetic ? 2 : 1;
    const long units = cfg.paths / unit_paths;
    const double ln_x0 = std::log(cfg.x0);
    const bool exact = cfg.scheme == SimScheme::ExactLognormal;

    auto kern = [&](long batch, long u0, long u1) {
        auto gen = make_stream(cfg.master_seed, static_cast<std::uint64_t>(batch));
        std::normal_distribution<double> nd;
        std::vector<double> lx(static_cast<std::size_t>(unit_paths)); // log(X/x0)
        std::vector<double> xe(static_cast<std::size_t>(unit_paths)); // Euler wealth level
        std::vector<PathStats> st(static_cast<std::size_t>(unit_paths));
        for (long u = u0; u < u1; ++u) {
            const long p0 = u * unit_paths;
            for (long i = 0; i < unit_paths; ++i) {
                lx[static_cast<std::size_t>(i)] = 0.0;
                xe[static_cast<std::size_t>(i)] = cfg.x0;
                const double lc0 = ln_x0 - tb.lnB[0];
                st[static_cast<std::size_t>(i)] = {lc0, lc0, 0.0, lc0};
            }
            int rep = 0;
            for (int k = 0; k <= tb.last; ++k) {
                for (long i = 0; i < unit_paths; ++i) {
                    const std::size_t si = static_cast<std::size_t>(i);
                    double lc;
                    if (exact) {
                        // log c carried incrementally (st.prev_lc); recomputing
                        // it from lx would reintroduce roundoff that breaks the
                        // exact-constancy cases
                        lc = st[si].prev_lc;
                    } else {
                        const double xv = xe[si];
                        if (!(xv > 0.0) || !std::isfinite(xv))
                            throw NumericalBlowupError(p0 + i, "wealth left (0, inf) under Euler");
                        lc = std::log(xv / tb.B[static_cast<std::size_t>(k)]);
                        if (k > 0) {
                            const double d = lc - st[si].prev_lc;
                            st[si].qv += d * d;
                        }
                        st[si].prev_lc = lc;
                    }
                    st[si].lmax = std::max(st[si].lmax, lc);
                    st[si].lmin = std::min(st[si].lmin, lc);
                    if (cfg.record_full) {
                        const std::size_t fi =
                            static_cast<std::size_t>(p0 + i) * static_cast<std::size_t>(cfg.steps) +
                            static_cast<std::size_t>(k);
                        bundle.full_c[fi] = std::exp(lc);
                        bundle.full_x[fi] =
                            exact ? cfg.x0 * std::exp(lx[si]) : xe[si];
                    }
                }
                if (rep < nrep && bundle.report_steps[static_cast<std::size_t>(rep)] == k) {
                    for (long i = 0; i < unit_paths; ++i) {
                        const std::size_t si = static_cast<std::size_t>(i);
                        const std::size_t cell =
                            static_cast<std::size_t>(p0 + i) * static_cast<std::size_t>(nrep) +
                            static_cast<std::size_t>(rep);
                        bundle.c[cell] = std::exp(st[si].prev_lc);
                        bundle.x[cell] = exact ? cfg.x0 * std::exp(lx[si]) : xe[si];
                        bundle.c_max[cell] = std::exp(st[si].lmax);
                        bundle.c_min[cell] = std::exp(st[si].lmin);
                        bundle.qv_logc[cell] = st[si].qv;
                    }
                    ++rep;
                }
                if (k == tb.last) break;
                const double xi = nd(gen);
                const std::size_t sk = static_cast<std::size_t>(k);
                for (long i = 0; i < unit_paths; ++i) {
                    const std::size_t si = static_cast<std::size_t>(i);
                    const double noise = (i == 0) ? xi : -xi;
                    if (exact) {
                        const double incr = tb.pre_drift[sk] + tb.vol_sd[sk] * noise;
                        lx[si] += incr;
                        const double dlc = incr - tb.dlnB[sk];
                        st[si].qv += dlc * dlc;
                        st[si].prev_lc += dlc;
                    } else {
                        xe[si] *= 1.0 + tb.e_drift[sk] + tb.vol_sd[sk] * noise;
                    }
                }
            }
            for (long i = 0; i < unit_paths; ++i) {
                const std::size_t si = static_cast<std::size_t>(i);
                const std::size_t p = static_cast<std::size_t>(p0 + i);
                bundle.terminal_raw[p] =
                    exact ? std::exp(lx[si]) : xe[si] / cfg.x0;
                bundle.terminal_deflated[p] =
                    std::exp(-tb.drain_cum[static_cast<std::size_t>(tb.last)]);
                bundle.budget_residual[p] = tb.budget_residual;
            }
        }
    };
    run_batches(units, cfg.threads, kern);
    return bundle;
}

PathBundle simulate(const VasicekMarket& market, const InvestmentStrategy& pi,
                    const ConsumptionRule& rule, const SimConfig& cfg) {
    cfg.validate();
    market.validate();
    if (pi.regime() != InvestmentStrategy::Regime::State)
        throw ConfigError("Vasicek market needs a state-dependent strategy");
    if (!rule.is_surface())
        throw RuleError("Vasicek simulation needs a surface-backed rule");
    if (std::abs(rule.horizon() - market.T) > 1e-12)
        throw RuleError("rule horizon does not match the market");
    const FactorSurface& S = rule.surf();
    const double T = market.T;
    const double dt = T / cfg.steps;
    const double sqrt_dt = std::sqrt(dt);
    const int last = cfg.steps - 1;
    const double decay = (market.kappa == 0.0) ? 1.0 : std::exp(-market.kappa * dt);
    const double ou_sd = market.ou_stdev(dt);
    const int budget_stride = std::max(1, cfg.steps / 2000);

    PathBundle bundle;
    init_bundle(bundle, cfg, T, true);
    bundle.c0 = cfg.x0 / S.value(0.0, market.r0);

    const int nrep = bundle.n_reports();
    const long unit_paths = cfg.antithetic ? 2 : 1;
    const long units = cfg.paths / unit_paths;
    const double ln_x0 = std::log(cfg.x0);
    const bool exact = cfg.scheme == SimScheme::ExactLognormal;
    const double s22 = market.sigma22;

    struct VasState {
        double lx, xe, rr, drain_cum, budget_acc, prev_q, prev_qt, pv;
        PathStats st;
    };

    auto kern = [&](long batch, long u0, long u1) {
        auto gen = make_stream(cfg.master_seed, static_cast<std::uint64_t>(batch));
        std::normal_distribution<double> nd;
        std::vector<VasState> v(static_cast<std::size_t>(unit_paths));
        for (long u = u0; u < u1; ++u) {
            const long p0 = u * unit_paths;
            const double lc0 = std::log(bundle.c0);
            for (long i = 0; i < unit_paths; ++i)
                v[static_cast<std::size_t>(i)] = {0.0,  cfg.x0, market.r0, 0.0, 0.0, 0.0, 0.0,
                                                  0.0, {lc0, lc0, 0.0, lc0}};
            int rep = 0;
            for (int k = 0; k <= last; ++k) {
                const double t = dt * k;
                for (long i = 0; i < unit_paths; ++i) {
                    VasState& s = v[static_cast<std::size_t>(i)];
                    const double a_val = S.value(t, s.rr);
                    if (!(a_val > 0.0))
                        throw RuleError("surface factor not positive at t=" + std::to_string(t));
                    double lc;
                    if (exact) {
                        lc = ln_x0 + s.lx - std::log(a_val);
                    } else {
                        if (!(s.xe > 0.0) || !std::isfinite(s.xe))
                            throw NumericalBlowupError(p0 + i, "wealth left (0, inf) under Euler");
                        lc = std::log(s.xe / a_val);
                    }
                    if (k > 0) {
                        const double d = lc - s.st.prev_lc;
                        s.st.qv += d * d;
                    }
                    s.st.prev_lc = lc;
                    s.st.lmax = std::max(s.st.lmax, lc);
                    s.st.lmin = std::min(s.st.lmin, lc);
                    if (k % budget_stride == 0 || k == last) {
                        // c/Y^pi = x0 e^{-int 1/Z}/Z pathwise, both schemes
                        const double q = cfg.x0 * std::exp(-s.drain_cum) / a_val;
                        if (k > 0) s.budget_acc += 0.5 * (q + s.prev_q) * (t - s.prev_qt);
                        s.prev_q = q;
                        s.prev_qt = t;
                    }
                    if (cfg.record_full) {
                        const std::size_t fi =
                            static_cast<std::size_t>(p0 + i) * static_cast<std::size_t>(cfg.steps) +
                            static_cast<std::size_t>(k);
                        bundle.full_c[fi] = std::exp(lc);
                        bundle.full_x[fi] = exact ? cfg.x0 * std::exp(s.lx) : s.xe;
                        bundle.full_r[fi] = s.rr;
                    }
                }
                if (rep < nrep && bundle.report_steps[static_cast<std::size_t>(rep)] == k) {
                    for (long i = 0; i < unit_paths; ++i) {
                        VasState& s = v[static_cast<std::size_t>(i)];
                        const std::size_t cell =
                            static_cast<std::size_t>(p0 + i) * static_cast<std::size_t>(nrep) +
                            static_cast<std::size_t>(rep);
                        bundle.c[cell] = std::exp(s.st.prev_lc);
                        bundle.x[cell] = exact ? cfg.x0 * std::exp(s.lx) : s.xe;
                        bundle.r[cell] = s.rr;
                        bundle.c_max[cell] = std::exp(s.st.lmax);
                        bundle.c_min[cell] = std::exp(s.st.lmin);
                        bundle.qv_logc[cell] = s.st.qv;
                        bundle.pred_var[cell] = s.pv;
                    }
                    ++rep;
                }
                if (k == last) break;
                const double xi1 = nd(gen);
                const double xi2 = nd(gen);
                const double tau = T - t;
                const double t_mid = t + 0.5 * dt;
                const double log_tau_ratio = std::log(tau / (tau - dt));
                for (long i = 0; i < unit_paths; ++i) {
                    VasState& s = v[static_cast<std::size_t>(i)];
                    const double n1 = (i == 0) ? xi1 : -xi1;
                    const double n2 = (i == 0) ? xi2 : -xi2;
                    const auto frac = pi.fractions(t, s.rr);
                    const double w =
                        frac[0] * market.sigma11(t, s.rr) + frac[1] * market.sigma21(t, s.rr);
                    const double v2 = frac[1] * s22;
                    const double risk_prem = w * market.lambda1 + frac[1] * market.lambda2 * s22;
                    const double Da = S.duration(t, s.rr);
                    const double sc1 = w - market.sigma_r * Da;
                    s.pv += (sc1 * sc1 + v2 * v2) * dt;
                    if (exact) {
                        // time-exact drain against the frozen-rate factor slope
                        const double psi_mid = S.value(t_mid, s.rr) / (T - t_mid);
                        const double drain = log_tau_ratio / psi_mid;
                        s.lx += (s.rr + risk_prem - 0.5 * (w * w + v2 * v2)) * dt - drain +
                                w * sqrt_dt * n1 + v2 * sqrt_dt * n2;
                        s.drain_cum += drain;
                    } else {
                        const double a_val = S.value(t, s.rr);
                        const double drain = dt / a_val;
                        s.xe *= 1.0 + (s.rr + risk_prem) * dt - drain + w * sqrt_dt * n1 +
                                v2 * sqrt_dt * n2;
                        s.drain_cum += drain;
                    }
                    s.rr = (market.kappa == 0.0 ? s.rr
                                                : market.theta + (s.rr - market.theta) * decay) -
                           ou_sd * n1;
                }
            }
            for (long i = 0; i < unit_paths; ++i) {
                VasState& s = v[static_cast<std::size_t>(i)];
                const std::size_t p = static_cast<std::size_t>(p0 + i);
                bundle.terminal_raw[p] = exact ? std::exp(s.lx) : s.xe / cfg.x0;
                bundle.terminal_deflated[p] = std::exp(-s.drain_cum);
                bundle.budget_residual[p] = 1.0 - s.budget_acc / cfg.x0;
            }
        }
    };
    run_batches(units, cfg.threads, kern);
    return bundle;
}

namespace {

// mean/SE over inference units (antithetic pairs average first)
void unit_moments(const PathBundle& b, const std::vector<double>& per_path, int k, double& mean,
                  double& se, long& units_out) {
    const int nrep = b.n_reports();
    const long up = b.antithetic ? 2 : 1;
    const long units = b.paths / up;
    double sum = 0.0, sum2 = 0.0;
    for (long u = 0; u < units; ++u) {
        double val = 0.0;
        for (long i = 0; i < up; ++i)
            val += per_path[static_cast<std::size_t>(u * up + i) * static_cast<std::size_t>(nrep) +
                            static_cast<std::size_t>(k)];
        val /= static_cast<double>(up);
        sum += val;
        sum2 += val * val;
    }
    mean = sum / static_cast<double>(units);
    const double var =
        (units > 1) ? std::max(0.0, (sum2 - sum * mean)) / static_cast<double>(units - 1) : 0.0;
    se = std::sqrt(var / static_cast<double>(units));
    units_out = units;
}

// dense solve for the small regression systems
std::vector<double> small_solve(std::vector<std::vector<double>> A, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(A[i][k]) > std::abs(A[piv][k])) piv = i;
        std::swap(A[piv], A[k]);
        std::swap(b[piv], b[k]);
        if (A[k][k] == 0.0) throw Error("regression design is singular");
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = A[i][k] / A[k][k];
            for (std::size_t j = k; j < n; ++j) A[i][j] -= f * A[k][j];
            b[i] -= f * b[k];
        }
    }
    std::vector<double> x(n);
    for (std::size_t k = n; k-- > 0;) {
        double s = b[k];
        for (std::size_t j = k + 1; j < n; ++j) s -= A[k][j] * x[j];
        x[k] = s / A[k][k];
    }
    return x;
}

std::vector<std::vector<double>> small_inverse(std::vector<std::vector<double>> A) {
    const std::size_t n = A.size();
    std::vector<std::vector<double>> inv(n, std::vector<double>(n, 0.0));
    for (std::size_t c = 0; c < n; ++c) {
        std::vector<double> e(n, 0.0);
        e[c] = 1.0;
        const auto col = small_solve(A, e);
        for (std::size_t i = 0; i < n; ++i) inv[i][c] = col[i];
    }
    return inv;
}

} // namespace

MartingaleReport martingale_test(const PathBundle& b) {
    MartingaleReport rep;
    rep.c0 = b.c0;
    const int nrep = b.n_reports();
    for (int k = 0; k < nrep; ++k) {
        ReportRow row;
        row.t = b.report_times[static_cast<std::size_t>(k)];
        unit_moments(b, b.c, k, row.mean_c, row.se, rep.units);
        const double dev = row.mean_c - b.c0;
        row.z = (row.se > 0.0) ? dev / row.se : (dev == 0.0 ? 0.0 : std::copysign(1e300, dev));
        row.drift_rate = (row.t > 0.0 && row.mean_c > 0.0 && b.c0 > 0.0)
                             ? std::log(row.mean_c / b.c0) / row.t
                             : 0.0;
        rep.max_abs_z = std::max(rep.max_abs_z, std::abs(row.z));
        rep.rows.push_back(row);
    }

    // conditional regression between two interior report times
    if (nrep >= 2) {
        const int k1 = nrep / 3;
        int k2 = (2 * nrep) / 3;
        if (k2 <= k1) k2 = std::min(nrep - 1, k1 + 1);
        if (k2 > k1) {
            const long up = b.antithetic ? 2 : 1;
            const long units = b.paths / up;
            auto unit_val = [&](const std::vector<double>& arr, long u, int k) {
                double val = 0.0;
                for (long i = 0; i < up; ++i)
                    val += arr[static_cast<std::size_t>(u * up + i) *
                                   static_cast<std::size_t>(nrep) +
                               static_cast<std::size_t>(k)];
                return val / static_cast<double>(up);
            };
            const int n_reg = 4;
            std::vector<std::array<double, 5>> X(static_cast<std::size_t>(units));
            std::vector<double> y(static_cast<std::size_t>(units));
            for (long u = 0; u < units; ++u) {
                X[static_cast<std::size_t>(u)] = {1.0, unit_val(b.c, u, k1),
                                                  unit_val(b.c_max, u, k1),
                                                  unit_val(b.c_min, u, k1),
                                                  unit_val(b.qv_logc, u, k1)};
                y[static_cast<std::size_t>(u)] = unit_val(b.c, u, k2) - unit_val(b.c, u, k1);
            }
            // drop regressors without cross-sectional variation
            std::array<bool, 4> active{};
            std::vector<int> cols{0};
            for (int j = 1; j <= n_reg; ++j) {
                double m = 0.0, v2 = 0.0;
                for (long u = 0; u < units; ++u) m += X[static_cast<std::size_t>(u)][j];
                m /= static_cast<double>(units);
                for (long u = 0; u < units; ++u) {
                    const double d = X[static_cast<std::size_t>(u)][j] - m;
                    v2 += d * d;
                }
                v2 /= static_cast<double>(units);
                if (v2 > 1e-20 * std::max(1.0, m * m)) {
                    active[static_cast<std::size_t>(j - 1)] = true;
                    cols.push_back(j);
                }
            }
            rep.conditional.t1 = b.report_times[static_cast<std::size_t>(k1)];
            rep.conditional.t2 = b.report_times[static_cast<std::size_t>(k2)];
            rep.conditional.active = active;
            const std::size_t p = cols.size();
            if (p >= 2 && units > static_cast<long>(p) + 4) {
                std::vector<std::vector<double>> xtx(p, std::vector<double>(p, 0.0));
                std::vector<double> xty(p, 0.0);
                for (long u = 0; u < units; ++u) {
                    for (std::size_t a2 = 0; a2 < p; ++a2) {
                        const double xa =
                            X[static_cast<std::size_t>(u)][static_cast<std::size_t>(cols[a2])];
                        xty[a2] += xa * y[static_cast<std::size_t>(u)];
                        for (std::size_t b2 = 0; b2 < p; ++b2)
                            xtx[a2][b2] +=
                                xa *
                                X[static_cast<std::size_t>(u)][static_cast<std::size_t>(cols[b2])];
                    }
                }
                const auto beta = small_solve(xtx, xty);
                const auto xtx_inv = small_inverse(xtx);
                // HC0 sandwich
                std::vector<std::vector<double>> meat(p, std::vector<double>(p, 0.0));
                for (long u = 0; u < units; ++u) {
                    double fit = 0.0;
                    for (std::size_t a2 = 0; a2 < p; ++a2)
                        fit += beta[a2] *
                               X[static_cast<std::size_t>(u)][static_cast<std::size_t>(cols[a2])];
                    const double e2 = (y[static_cast<std::size_t>(u)] - fit) *
                                      (y[static_cast<std::size_t>(u)] - fit);
                    for (std::size_t a2 = 0; a2 < p; ++a2)
                        for (std::size_t b2 = 0; b2 < p; ++b2)
                            meat[a2][b2] +=
                                e2 *
                                X[static_cast<std::size_t>(u)][static_cast<std::size_t>(cols[a2])] *
                                X[static_cast<std::size_t>(u)][static_cast<std::size_t>(cols[b2])];
                }
                for (std::size_t a2 = 0; a2 < p; ++a2) {
                    for (int j = 1; j <= n_reg; ++j)
                        if (cols[a2] == j) {
                            double var = 0.0;
                            for (std::size_t m1 = 0; m1 < p; ++m1)
                                for (std::size_t m2 = 0; m2 < p; ++m2)
                                    var += xtx_inv[a2][m1] * meat[m1][m2] * xtx_inv[m2][a2];
                            rep.conditional.coef[static_cast<std::size_t>(j - 1)] = beta[a2];
                            rep.conditional.t_stat[static_cast<std::size_t>(j - 1)] =
                                (var > 0.0) ? beta[a2] / std::sqrt(var) : 0.0;
                        }
                }
                rep.conditional.valid = true;
            }
        }
    }
    return rep;
}

ExhaustionStats exhaustion_check(const PathBundle& b) {
    ExhaustionStats s;
    for (double v : b.terminal_raw) s.max_raw = std::max(s.max_raw, v);
    for (double v : b.terminal_deflated) s.max_deflated = std::max(s.max_deflated, v);
    for (double v : b.budget_residual)
        s.max_budget_residual = std::max(s.max_budget_residual, std::abs(v));
    return s;
}

std::vector<VolRow> vol_check(const PathBundle& b, const VasicekMarket& market,
                              const InvestmentStrategy& pi, const FactorSurface& surface) {
    if (!b.stochastic_rate || b.pred_var.empty())
        throw RuleError("vol_check needs a stochastic-rate simulation with a surface rule");
    const int nrep = b.n_reports();
    std::vector<VolRow> rows;
    double prev_t = 0.0;
    for (int k = 0; k < nrep; ++k) {
        VolRow row;
        row.t0 = prev_t;
        row.t1 = b.report_times[static_cast<std::size_t>(k)];
        double realized = 0.0, predicted = 0.0, mean_r = 0.0;
        for (long p = 0; p < b.paths; ++p) {
            const std::size_t cell = static_cast<std::size_t>(p) * static_cast<std::size_t>(nrep) +
                                     static_cast<std::size_t>(k);
            const std::size_t prev =
                static_cast<std::size_t>(p) * static_cast<std::size_t>(nrep) +
                static_cast<std::size_t>(k - 1);
            realized += (k == 0) ? b.qv_logc[cell] : b.qv_logc[cell] - b.qv_logc[prev];
            predicted += (k == 0) ? b.pred_var[cell] : b.pred_var[cell] - b.pred_var[prev];
            mean_r += b.r[cell];
        }
        realized /= static_cast<double>(b.paths);
        predicted /= static_cast<double>(b.paths);
        mean_r /= static_cast<double>(b.paths);
        row.realized = realized;
        row.predicted = predicted;
        const auto frac = pi.fractions(row.t0, mean_r);
        const double w =
            frac[0] * market.sigma11(row.t0, mean_r) + frac[1] * market.sigma21(row.t0, mean_r);
        const double sc1 = w - market.sigma_r * surface.duration(row.t0, mean_r);
        const double v2 = frac[1] * market.sigma22;
        row.sigma_c = std::sqrt(sc1 * sc1 + v2 * v2);
        row.rel_err = (predicted > 1e-12 || realized > 1e-12)
                          ? std::abs(realized - predicted) / std::max(predicted, 1e-12)
                          : 0.0;
        rows.push_back(row);
        prev_t = row.t1;
    }
    return rows;
}

} // namespace mcs
