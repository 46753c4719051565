#include "fracrisk/risk_mc.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <ostream>
#include <thread>

#include "fracrisk/errors.hpp"
#include "fracrisk/generator.hpp"

namespace fracrisk {

namespace {

struct Counters {
    std::vector<std::size_t> successes;  // [x][horizon]
    std::vector<std::size_t> capped;
    std::size_t non_finite = 0;
};

std::vector<double> draw_clock(const SubordinatorParams& sub, const std::vector<double>& horizons, double cap,
                               const McConfig& cfg, RngStream& rng) {
    std::vector<double> e(horizons.size());
    if (sub.memoryless()) return horizons;
    const double beta = sub.beta();
    if (cfg.clock == ClockMode::independent) {
        for (std::size_t h = 0; h < horizons.size(); ++h) e[h] = sample_inverse_subordinator(beta, horizons[h], rng);
        return e;
    }
    // Coupled clock: one subordinator path, stopped once it passes the last
    // horizon or the operational cap.
    SubordinatorPath path{cfg.path_du, {0.0}};
    const double t_last = horizons.back();
    while (path.values.back() <= t_last && path.u_max() < cap) {
        path.values.push_back(path.values.back() + sample_subordinator_increment(beta, cfg.path_du, rng));
    }
    for (std::size_t h = 0; h < horizons.size(); ++h) {
        e[h] = horizons[h] < path.values.back() ? invert_path(path, horizons[h]) : std::numeric_limits<double>::infinity();
    }
    return e;
}

// Runs n_x * n_paths base paths over the workers; event(k, rng, s_run)
// returns the passage record of one path from start state k.
template <class Event>
McTable run_grid(std::size_t n_x, const std::vector<double>& horizons, std::size_t n_paths, RiskKind kind,
                 const SubordinatorParams& sub, const McConfig& cfg, const RngStream& rng, Event event) {
    if (n_paths == 0) throw DomainError("Monte Carlo needs at least one path");
    if (horizons.empty()) throw DomainError("Monte Carlo needs at least one horizon");
    for (std::size_t h = 0; h < horizons.size(); ++h) {
        if (!(horizons[h] >= 0.0)) throw DomainError("horizons must be nonnegative");
        if (h > 0 && horizons[h] < horizons[h - 1]) throw DomainError("horizons must be sorted ascending");
    }
    const std::size_t n_h = horizons.size();
    const double cap = operational_cap(sub, horizons.back(), cfg, rng);

    std::size_t workers = cfg.workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.workers;
    const std::size_t total = n_x * n_paths;
    workers = std::max<std::size_t>(1, std::min(workers, total));

    std::vector<Counters> counters(workers);
    std::vector<std::exception_ptr> errors(workers);
    auto work = [&](std::size_t w) {
        try {
            Counters& c = counters[w];
            c.successes.assign(n_x * n_h, 0);
            c.capped.assign(n_x * n_h, 0);
            const std::size_t begin = total * w / workers;
            const std::size_t end = total * (w + 1) / workers;
            for (std::size_t task = begin; task < end; ++task) {
                const std::size_t k = task / n_paths;
                RngStream path_rng = rng.substream(task);
                const std::vector<double> clock = draw_clock(sub, horizons, cap, cfg, path_rng);
                const double s_run = std::min(*std::max_element(clock.begin(), clock.end()), cap);
                const ExitRecord rec = event(k, path_rng, s_run);
                if (rec.non_finite) ++c.non_finite;
                for (std::size_t h = 0; h < n_h; ++h) {
                    const bool capped = clock[h] > cap;
                    const double horizon = std::min(clock[h], cap);
                    const bool happened = rec.exited && rec.exit_op_time <= horizon;
                    const bool success = kind == RiskKind::safety ? !happened : happened;
                    c.successes[k * n_h + h] += success ? 1 : 0;
                    c.capped[k * n_h + h] += capped ? 1 : 0;
                }
            }
        } catch (...) {
            errors[w] = std::current_exception();
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    McTable table;
    table.kind = kind;
    table.operational_cap = cap;
    std::vector<std::size_t> successes(n_x * n_h, 0);
    std::vector<std::size_t> capped(n_x * n_h, 0);
    for (const auto& c : counters) {
        for (std::size_t i = 0; i < n_x * n_h; ++i) {
            successes[i] += c.successes[i];
            capped[i] += c.capped[i];
        }
        table.non_finite_paths += c.non_finite;
    }
    for (std::size_t k = 0; k < n_x; ++k) {
        for (std::size_t h = 0; h < n_h; ++h) {
            McRow row;
            row.T = horizons[h];
            row.estimate = wilson_estimate(successes[k * n_h + h], n_paths);
            if (horizons[h] == 0.0) {
                // Deterministic at T = 0: the start state decides.
                row.estimate.ci_low = row.estimate.ci_high = row.estimate.p;
            }
            row.estimate.bias_bound = static_cast<double>(capped[k * n_h + h]) / static_cast<double>(n_paths);
            table.capped_pairs += capped[k * n_h + h];
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

void check_start(const SafeSet& safe, std::span<const double> x, RiskKind kind) {
    const double phi = safe.barrier(x);
    if (kind == RiskKind::safety && !(phi > 0.0)) {
        throw DomainError("safety estimate needs a start state inside the safe set; use mc_recovery");
    }
    if (kind == RiskKind::recovery && !(phi < 0.0)) {
        throw DomainError("recovery estimate needs a start state outside the safe set; use mc_safety");
    }
}

Estimate single(const SystemSpec& sys, const SafeSet& safe, std::span<const double> x0, double T, std::size_t n_paths,
                RiskKind kind, const McConfig& cfg, const RngStream& rng) {
    const std::vector<std::vector<double>> xs{std::vector<double>(x0.begin(), x0.end())};
    return mc_grid(sys, safe, xs, {T}, n_paths, kind, cfg, rng).rows.front().estimate;
}

}  // namespace

double Estimate::half_width() const noexcept { return std::max(p - ci_low, ci_high - p); }

Estimate wilson_estimate(std::size_t successes, std::size_t n, double z) {
    if (n == 0) throw DomainError("estimate needs n >= 1");
    if (successes > n) throw DomainError("successes exceed trials");
    Estimate e;
    e.n = n;
    e.successes = successes;
    const double nd = static_cast<double>(n);
    e.p = static_cast<double>(successes) / nd;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nd;
    const double centre = (e.p + z2 / (2.0 * nd)) / denom;
    const double half = z / denom * std::sqrt(e.p * (1.0 - e.p) / nd + z2 / (4.0 * nd * nd));
    e.ci_low = std::clamp(std::min(centre - half, e.p), 0.0, 1.0);
    e.ci_high = std::clamp(std::max(centre + half, e.p), 0.0, 1.0);
    return e;
}

double operational_cap(const SubordinatorParams& sub, double horizon, const McConfig& cfg, const RngStream& rng) {
    if (sub.memoryless() || horizon == 0.0) return horizon;
    if (!(cfg.cap_quantile > 0.0 && cfg.cap_quantile < 1.0) || cfg.cap_samples == 0) {
        throw DomainError("operational cap needs a quantile in (0, 1) and at least one sample");
    }
    RngStream cap_rng(rng.seed(), mix_stream(rng.stream_id(), stream_id_for("risk_mc.cap")));
    std::vector<double> draws(cfg.cap_samples);
    for (double& d : draws) d = sample_inverse_subordinator(sub.beta(), horizon, cap_rng);
    const auto idx = static_cast<std::size_t>(
        std::ceil(cfg.cap_quantile * static_cast<double>(draws.size())) - 1.0);
    std::nth_element(draws.begin(), draws.begin() + static_cast<std::ptrdiff_t>(idx), draws.end());
    return draws[idx];
}

Estimate mc_safety(const SystemSpec& sys, const SafeSet& safe, std::span<const double> x0, double T,
                   std::size_t n_paths, const McConfig& cfg, const RngStream& rng) {
    return single(sys, safe, x0, T, n_paths, RiskKind::safety, cfg, rng);
}

Estimate mc_recovery(const SystemSpec& sys, const SafeSet& safe, std::span<const double> x0, double T,
                     std::size_t n_paths, const McConfig& cfg, const RngStream& rng) {
    return single(sys, safe, x0, T, n_paths, RiskKind::recovery, cfg, rng);
}

McTable mc_grid(const SystemSpec& sys, const SafeSet& safe, const std::vector<std::vector<double>>& xs,
                const std::vector<double>& horizons, std::size_t n_paths, RiskKind kind, const McConfig& cfg,
                const RngStream& rng) {
    for (const auto& x : xs) {
        if (static_cast<int>(x.size()) != sys.dim) throw DomainError("start state has the wrong dimension");
        check_start(safe, x, kind);
    }
    EulerOptions euler;
    euler.ds = cfg.ds;
    euler.gaussian_bridge = cfg.gaussian_bridge;
    euler.clamp_lower = cfg.clamp_lower;
    euler.clamp_upper = cfg.clamp_upper;
    const Passage passage = kind == RiskKind::safety ? Passage::exit : Passage::recovery;
    McTable table = run_grid(xs.size(), horizons, n_paths, kind, sys.subordinator, cfg, rng,
                             [&](std::size_t k, RngStream& r, double s_run) {
                                 return first_passage_euler(sys, safe, xs[k], s_run, passage, r, euler);
                             });
    std::size_t i = 0;
    for (const auto& x : xs) {
        for (std::size_t h = 0; h < horizons.size(); ++h) table.rows[i++].x = x;
    }
    return table;
}

McTable mc_grid_ctmc(const GeneratorMatrix& gen, const SubordinatorParams& sub, const std::vector<std::size_t>& cells,
                     const std::vector<double>& horizons, std::size_t n_paths, RiskKind kind, const McConfig& cfg,
                     const RngStream& rng) {
    if (kind == RiskKind::recovery && gen.region() != Region::complement) {
        throw DomainError("CTMC recovery needs a generator on the complement region");
    }
    const CtmcSimulator chain(gen);
    McTable table = run_grid(cells.size(), horizons, n_paths, kind, sub, cfg, rng,
                             [&](std::size_t k, RngStream& r, double s_run) {
                                 return chain.exit_time(cells[k], s_run, r);
                             });
    std::size_t i = 0;
    for (std::size_t c : cells) {
        const auto centre = gen.grid().center(c);
        for (std::size_t h = 0; h < horizons.size(); ++h) {
            table.rows[i++].x.assign(centre.begin(), centre.begin() + gen.grid().dim());
        }
    }
    return table;
}

void write_mc_csv(const McTable& table, std::ostream& out) {
    const std::size_t dim = table.rows.empty() ? 1 : table.rows.front().x.size();
    for (std::size_t d = 0; d < dim; ++d) out << 'x' << d + 1 << ',';
    out << "T,p,ci_low,ci_high,n_paths,bias_bound\n";
    const auto precision = out.precision(17);
    for (const auto& row : table.rows) {
        for (double v : row.x) out << v << ',';
        const Estimate& e = row.estimate;
        out << row.T << ',' << e.p << ',' << e.ci_low << ',' << e.ci_high << ',' << e.n << ',' << e.bias_bound << '\n';
    }
    out.precision(precision);
}

}  // namespace fracrisk
