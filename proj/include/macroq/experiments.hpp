#ifndef MACROQ_EXPERIMENTS_HPP
#define MACROQ_EXPERIMENTS_HPP

#include <atomic>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <thread>

#include "macroq/chsh_optimize.hpp"
#include "macroq/config.hpp"
#include "macroq/finite_n.hpp"
#include "macroq/serialize.hpp"
#include "macroq/version.hpp"

namespace macroq {

/// Raised on quadrature/truncation failures surfaced by a run; maps to exit
/// code 3. Module diagnostics travel verbatim in what().
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

/// Deterministic parallel map: results land in preassigned slots, so the
/// output is identical for any thread count.
template <typename F>
inline void parallel_for(int n, int n_threads, F&& body) {
    if (n_threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    int workers = std::min(n_threads, n);
    std::vector<std::exception_ptr> errors(workers);
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            try {
                for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (std::thread& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

}  // namespace detail

struct RunResult {
    std::vector<std::string> files;  // paths written, manifest last
    json summary;                    // the primary JSON artifact, when any
};

class ExperimentRunner {
  public:
    ExperimentRunner(ExperimentConfig config, std::string out_dir, int threads = 1)
        : cfg_(std::move(config)), out_dir_(std::move(out_dir)), threads_(threads) {
        std::filesystem::create_directories(out_dir_);
    }

    RunResult run() {
        switch (cfg_.kind) {
            case ExperimentKind::convergence: return run_convergence();
            case ExperimentKind::identities: return run_identities();
            case ExperimentKind::lg_chsh: return run_lg_chsh();
            case ExperimentKind::bell_chsh: return run_bell_chsh();
            case ExperimentKind::density: return run_density();
        }
        throw ConfigError("unknown experiment kind");
    }

  private:
    std::string path(const std::string& name) const { return out_dir_ + "/" + name; }

    json config_record() const {
        json state = json::array();
        for (const cplx& v : cfg_.state_c) state.push_back(to_json(v));
        return json{{"experiment", to_string(cfg_.kind)},
                    {"state_c", state},
                    {"channel", to_json(cfg_.channel)},
                    {"sigma", cfg_.sigma},
                    {"observable", cfg_.observable},
                    {"prefix", cfg_.prefix}};
    }

    void write_manifest(RunResult& result, json extra = json::object()) {
        json files = json::array();
        for (const std::string& f : result.files)
            files.push_back(std::filesystem::path(f).filename().string());
        json manifest{{"version", version},
                      {"config", config_record()},
                      {"files", files},
                      {"parameters", extra},
                      {"timestamp", std::time(nullptr)}};
        std::string p = path(cfg_.prefix + "_manifest.json");
        detail::write_text(p, manifest.dump(2) + "\n");
        result.files.push_back(p);
    }

    GridSpec grid_for(const QubitObservable& a, int d) const {
        if (cfg_.has_grid) return cfg_.grid;
        return recommended_grid(cfg_.channel, a, cfg_.sigma, d);
    }

    RunResult run_convergence() {
        RunResult out;
        QubitObservable a = cfg_.make_observable();
        int d = int(cfg_.state_c.size());
        GridSpec grid = grid_for(a, d);
        PointerSpec pointer{cfg_.sigma};

        LimitMeasurement meas = limit_params(cfg_.channel, a, cfg_.sigma);
        DensityGrid limit = single_meas_density(FockState::pure(cfg_.state_c), meas, grid);
        std::string limit_path = path(cfg_.prefix + "_limit_density.csv");
        write_csv(limit, limit_path);
        out.files.push_back(limit_path);

        const int n_runs = int(cfg_.n_values.size());
        std::vector<DensityGrid> finite(n_runs);
        std::vector<double> ks(n_runs);
        detail::parallel_for(n_runs, threads_, [&](int i) {
            DickeCoefficients st = DickeCoefficients::pure(cfg_.n_values[i], cfg_.state_c);
            finite[i] = finite_distribution(st, a, cfg_.channel, pointer, grid);
            ks[i] = ks_distance(finite[i], limit);
        });

        std::ostringstream csv;
        csv << "N,ks_distance\n";
        for (int i = 0; i < n_runs; ++i) {
            csv << cfg_.n_values[i] << ',' << format_double(ks[i]) << '\n';
            std::string p = path(cfg_.prefix + "_finite_N" + std::to_string(cfg_.n_values[i]) +
                                 ".csv");
            write_csv(finite[i], p);
            out.files.push_back(p);
        }
        std::string ks_path = path(cfg_.prefix + "_convergence.csv");
        detail::write_text(ks_path, csv.str());
        out.files.push_back(ks_path);

        json ks_json = json::array();
        for (int i = 0; i < n_runs; ++i)
            ks_json.push_back(json{{"N", cfg_.n_values[i]}, {"ks", ks[i]}});
        out.summary = json{{"ks", ks_json}, {"beta", meas.beta}, {"phi", meas.phi}};
        write_manifest(out, out.summary);
        return out;
    }

    RunResult run_identities() {
        RunResult out;
        std::vector<IdentityReport> reports = identity_suite(cfg_.identity_seed);
        json arr = json::array();
        bool all_pass = true;
        for (const IdentityReport& r : reports) {
            arr.push_back(to_json(r));
            all_pass = all_pass && r.pass;
        }
        out.summary = json{{"reports", arr}, {"all_pass", all_pass}, {"seed", cfg_.identity_seed}};
        std::string p = path(cfg_.prefix + "_identities.json");
        detail::write_text(p, out.summary.dump(2) + "\n");
        out.files.push_back(p);
        write_manifest(out, json{{"seed", cfg_.identity_seed}});
        return out;
    }

    RunResult run_lg_chsh() {
        RunResult out;
        if (cfg_.reproduce_paper) {
            FockState st = lg_reference_state();
            std::array<double, 4> angles = lg_reference_angles();
            double reference = lg_reference_value();
            SigmaScanResult peak =
                maximize_lg_over_sigma(st, angles, cfg_.width_min, cfg_.width_max, 40);
            SigmaRecoveryResult rec = recover_sigma_for_value(st, angles, reference,
                                                              cfg_.width_min, cfg_.width_max, 40);
            out.summary = json{{"reference_value", reference},
                               {"scan_max", json{{"sigma", peak.sigma_star}, {"C", peak.value}}},
                               {"recovered", json{{"sigma_star", rec.sigma_star},
                                                  {"sigma_crossings", rec.crossings},
                                                  {"C", rec.value},
                                                  {"abs_delta", std::abs(rec.value - reference)}}},
                               {"result", to_json(rec.best)}};
            std::string sp = path(cfg_.prefix + "_sigma_scan.csv");
            std::ostringstream csv;
            csv << "sigma,C\n";
            for (const SigmaScanPoint& p : peak.trace)
                csv << format_double(p.sigma) << ',' << format_double(p.value) << '\n';
            detail::write_text(sp, csv.str());
            out.files.push_back(sp);
        } else {
            std::vector<OptTracePoint> trace;
            OptimizeOptions opts;
            opts.d = cfg_.chsh_d;
            opts.width_min = cfg_.width_min;
            opts.width_max = cfg_.width_max;
            opts.seeds = cfg_.seeds;
            opts.max_iter = cfg_.max_iter;
            opts.trace = &trace;
            CHSHResult best = optimize_chsh(CHSHResult::Kind::leggett_garg, opts);
            out.summary = json{{"result", to_json(best)}, {"n_trace", trace.size()}};
            out.files.push_back(write_trace(trace));
        }
        std::string p = path(cfg_.prefix + "_lg_chsh.json");
        detail::write_text(p, out.summary.dump(2) + "\n");
        out.files.push_back(p);
        write_manifest(out);
        return out;
    }

    RunResult run_bell_chsh() {
        RunResult out;
        std::vector<OptTracePoint> trace;
        OptimizeOptions opts;
        opts.d = cfg_.chsh_d;
        opts.width_min = cfg_.width_min;
        opts.width_max = cfg_.width_max;
        opts.seeds = cfg_.seeds;
        opts.max_iter = cfg_.max_iter;
        opts.trace = &trace;
        CHSHResult best = optimize_chsh(CHSHResult::Kind::bell, opts);
        out.summary = json{{"result", to_json(best)},
                           {"violation_margin", best.value - 2.0},
                           {"n_trace", trace.size()}};
        out.files.push_back(write_trace(trace));
        std::string p = path(cfg_.prefix + "_bell_chsh.json");
        detail::write_text(p, out.summary.dump(2) + "\n");
        out.files.push_back(p);
        write_manifest(out);
        return out;
    }

    RunResult run_density() {
        RunResult out;
        QubitObservable a = cfg_.make_observable();
        int d = int(cfg_.state_c.size());
        GridSpec grid = grid_for(a, d);
        PointerSpec pointer{cfg_.sigma};
        DickeCoefficients st = DickeCoefficients::pure(cfg_.n_particles, cfg_.state_c);

        DensityGrid finite = finite_distribution(st, a, cfg_.channel, pointer, grid);
        std::string pf = path(cfg_.prefix + "_finite.csv");
        write_csv(finite, pf);
        out.files.push_back(pf);

        LimitMeasurement meas = limit_params(cfg_.channel, a, cfg_.sigma);
        DensityGrid limit = single_meas_density(FockState::pure(cfg_.state_c), meas, grid);
        std::string pl = path(cfg_.prefix + "_limit.csv");
        write_csv(limit, pl);
        out.files.push_back(pl);

        json extra{{"N", cfg_.n_particles}, {"ks_to_limit", ks_distance(finite, limit)}};
        if (cfg_.n_particles <= 10) {
            DensityGrid brute = brute_force_distribution(st, a, cfg_.channel, pointer, grid);
            std::string pb = path(cfg_.prefix + "_brute.csv");
            write_csv(brute, pb);
            out.files.push_back(pb);
            extra["l1_finite_vs_brute"] = l1_distance(finite, brute);
        }
        out.summary = extra;
        write_manifest(out, extra);
        return out;
    }

    std::string write_trace(const std::vector<OptTracePoint>& trace) {
        std::ostringstream csv;
        csv << "start,iteration,value,params\n";
        for (const OptTracePoint& t : trace) {
            csv << t.start_index << ',' << t.iteration << ',' << format_double(t.value) << ',';
            for (size_t i = 0; i < t.params.size(); ++i)
                csv << (i ? " " : "") << format_double(t.params[i]);
            csv << '\n';
        }
        std::string p = path(cfg_.prefix + "_trace.csv");
        detail::write_text(p, csv.str());
        return p;
    }

  public:
    /// The identity sub-suite shared by the `identities` experiment and the
    /// acceptance harness: Hermite product lemma, Laguerre f = g with both
    /// recurrences, and truncated POVM completeness.
    static std::vector<IdentityReport> identity_suite(std::uint64_t seed) {
        std::vector<IdentityReport> reports;
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> umod(0.15, 1.0);
        std::uniform_real_distribution<double> uarg(0.0, 2.0 * pi);
        std::uniform_real_distribution<double> uwidth(0.4, 2.0);
        auto rand_disk = [&]() { return std::polar(umod(rng), uarg(rng)); };

        {
            IdentityReport r;
            r.identity = "hermite_product_lemma";
            r.tolerance = 1e-8;
            std::vector<double> grid;
            for (double x = -5.0; x <= 5.0; x += 0.5) grid.push_back(x);
            double worst = 0.0;
            int n_cfg = 0;
            for (int k = 0; k <= 4; ++k)
                for (int l = 0; l <= k; ++l) {
                    double beta = uwidth(rng), gamma = uwidth(rng);
                    double alpha = std::hypot(beta, gamma);
                    worst = std::max(worst,
                                     hermite_product_lemma_check(alpha, beta, gamma, k, l, grid));
                    ++n_cfg;
                }
            r.parameters = json{{"orders", "k,l <= 4"}, {"configs", n_cfg}};
            r.residual = worst;
            r.pass = worst < r.tolerance;
            reports.push_back(r);
        }
        {
            IdentityReport r;
            r.identity = "laguerre_f_equals_g";
            r.tolerance = 1e-8;
            double worst = 0.0;
            for (int trial = 0; trial < 100; ++trial) {
                cplx a = rand_disk(), b = rand_disk(), ap = rand_disk(), bp = rand_disk();
                int k = trial % 7, l = (trial / 7) % 7;
                worst = std::max(worst, std::abs(lemma_f(k, l, a, b, ap, bp) -
                                                 lemma_g(k, l, a, b, ap, bp)));
            }
            r.parameters = json{{"orders", "k,l <= 6"}, {"quadruples", 100}};
            r.residual = worst;
            r.pass = worst < r.tolerance;
            reports.push_back(r);
        }
        {
            IdentityReport r;
            r.identity = "laguerre_recurrence_1";
            r.tolerance = 1e-8;
            double worst = 0.0;
            for (int trial = 0; trial < 10; ++trial) {
                cplx a = rand_disk(), b = rand_disk(), ap = rand_disk(), bp = rand_disk();
                for (int k = 0; k <= 8; ++k) {
                    worst = std::max(worst, std::abs(lemma_f(k + 1, 0, a, b, ap, bp) -
                                                     (b + bp) / double(k + 1) *
                                                         lemma_f(k, 0, a, b, ap, bp)));
                    worst = std::max(worst, std::abs(lemma_g(k + 1, 0, a, b, ap, bp) -
                                                     (b + bp) / double(k + 1) *
                                                         lemma_g(k, 0, a, b, ap, bp)));
                }
            }
            r.parameters = json{{"orders", "k <= 8"}, {"quadruples", 10}};
            r.residual = worst;
            r.pass = worst < r.tolerance;
            reports.push_back(r);
        }
        {
            IdentityReport r;
            r.identity = "laguerre_recurrence_2";
            r.tolerance = 1e-8;
            double worst = 0.0;
            for (int trial = 0; trial < 10; ++trial) {
                cplx a = rand_disk(), b = rand_disk(), ap = rand_disk(), bp = rand_disk();
                for (int k = 1; k <= 8; ++k)
                    for (int l = 0; l <= k - 1; ++l) {
                        cplx want_f = (a + ap) / double(l + 1) * lemma_f(k, l, a, b, ap, bp) +
                                      lemma_f(k - 1, l, a, b, ap, bp) / double(l + 1);
                        worst = std::max(worst,
                                         std::abs(lemma_f(k, l + 1, a, b, ap, bp) - want_f));
                        cplx want_g = (a + ap) / double(l + 1) * lemma_g(k, l, a, b, ap, bp) +
                                      lemma_g(k - 1, l, a, b, ap, bp) / double(l + 1);
                        worst = std::max(worst,
                                         std::abs(lemma_g(k, l + 1, a, b, ap, bp) - want_g));
                    }
            }
            r.parameters = json{{"orders", "k <= 8, l < k"}, {"quadruples", 10}};
            r.residual = worst;
            r.pass = worst < r.tolerance;
            reports.push_back(r);
        }
        {
            IdentityReport r;
            r.identity = "povm_completeness";
            r.tolerance = 1e-6;
            struct Cfg {
                double beta;
                int dim, protected_dim;
            };
            double worst = 0.0;
            json params = json::array();
            for (Cfg c : {Cfg{0.5, 96, 24}, Cfg{1.0, 64, 32}, Cfg{2.0, 48, 24}}) {
                double resid =
                    povm_completeness_residual(LimitMeasurement{c.beta, 0.0, c.beta}, c.dim,
                                               c.protected_dim);
                worst = std::max(worst, resid);
                params.push_back(json{{"beta", c.beta},
                                      {"dim", c.dim},
                                      {"protected_dim", c.protected_dim},
                                      {"residual", resid}});
            }
            r.parameters = params;
            r.residual = worst;
            r.pass = worst < r.tolerance;
            reports.push_back(r);
        }
        return reports;
    }

  private:
    ExperimentConfig cfg_;
    std::string out_dir_;
    int threads_;
};

}  // namespace macroq

#endif
