#include "dejitter/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "dejitter/fft.hpp"
#include "dejitter/jitter.hpp"
#include "dejitter/kalman.hpp"
#include "dejitter/mle.hpp"
#include "dejitter/parallel.hpp"
#include "dejitter/rng.hpp"
#include "dejitter/signal.hpp"

namespace dejitter {

namespace {

enum SeedStream : std::uint64_t {
    kStreamSignal = 0,
    kStreamJitter = 1,
    kStreamNoise = 2,
    kStreamMle = 3,
    kStreamInterferer = 4,
};

double mean_of(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

}  // namespace

Scenario scenario_from_string(const std::string& name) {
    if (name == "ndr_sweep") return Scenario::ndr_sweep;
    if (name == "density_sweep") return Scenario::density_sweep;
    if (name == "jitter_sweep") return Scenario::jitter_sweep;
    if (name == "bandwidth_sweep") return Scenario::bandwidth_sweep;
    if (name == "mle_vs_oracle") return Scenario::mle_vs_oracle;
    if (name == "evm_pipeline") return Scenario::evm_pipeline;
    if (name == "psd_stages") return Scenario::psd_stages;
    throw std::invalid_argument("unknown scenario: " + name);
}

std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::ndr_sweep: return "ndr_sweep";
        case Scenario::density_sweep: return "density_sweep";
        case Scenario::jitter_sweep: return "jitter_sweep";
        case Scenario::bandwidth_sweep: return "bandwidth_sweep";
        case Scenario::mle_vs_oracle: return "mle_vs_oracle";
        case Scenario::evm_pipeline: return "evm_pipeline";
        case Scenario::psd_stages: return "psd_stages";
    }
    return "?";
}

std::size_t PilotSpec::resolve_k_gap() const {
    if (kind == Kind::k_gap) {
        const auto k = static_cast<std::size_t>(std::llround(value));
        if (k < 1) throw std::invalid_argument("PilotSpec: k_gap must be >= 1");
        return k;
    }
    if (!(value > 0.0 && value <= 0.5))
        throw std::invalid_argument("PilotSpec: density must be in (0, 0.5]");
    const auto spacing = static_cast<std::size_t>(std::llround(1.0 / value));
    return std::max<std::size_t>(1, spacing - 1);
}

ExperimentConfig ExperimentConfig::from_config(const Config& cfg) {
    ExperimentConfig ec;
    ec.scenario = scenario_from_string(cfg.get_string("run.scenario", "ndr_sweep"));
    ec.n = static_cast<std::size_t>(cfg.get_int("signal.n", 1 << 16));
    ec.t_s = cfg.get_double("signal.t_s", 1e-8);
    ec.w_hz = cfg.get_double("signal.w_hz", 40e6);
    ec.power = cfg.get_double("signal.power", 1.0);
    ec.real_payload = cfg.get_bool("signal.real", true);

    ec.phi = cfg.get_double("jitter.phi", 0.999);
    if (cfg.has("jitter.sigma_eps") && cfg.has("jitter.jitter_percentage"))
        throw std::invalid_argument("jitter.sigma_eps and jitter.jitter_percentage are exclusive");
    if (cfg.has("jitter.sigma_eps")) {
        const double se = cfg.get_double("jitter.sigma_eps");
        ec.jitter_pct = se / (ec.t_s * std::sqrt((1.0 - ec.phi) * (1.0 + ec.phi)));
    } else {
        ec.jitter_pct = cfg.get_double("jitter.jitter_percentage", 1.5e-2);
    }

    if (cfg.has("noise.sigma_w") || cfg.has("noise.ndr_db") || cfg.has("noise.sinadr_db")) {
        const std::string key =
            cfg.require_exactly_one({"noise.sigma_w", "noise.ndr_db", "noise.sinadr_db"});
        if (key == "noise.sigma_w") ec.noise = {NoiseSpec::Kind::sigma_w, cfg.get_double(key)};
        if (key == "noise.ndr_db") ec.noise = {NoiseSpec::Kind::ndr_db, cfg.get_double(key)};
        if (key == "noise.sinadr_db") ec.noise = {NoiseSpec::Kind::sinadr_db, cfg.get_double(key)};
    }

    if (cfg.has("pilots.k_gap") || cfg.has("pilots.density")) {
        const std::string key = cfg.require_exactly_one({"pilots.k_gap", "pilots.density"});
        if (key == "pilots.k_gap") ec.pilots = {PilotSpec::Kind::k_gap, cfg.get_double(key)};
        if (key == "pilots.density") ec.pilots = {PilotSpec::Kind::density, cfg.get_double(key)};
    }

    ec.poly.degree = static_cast<int>(cfg.get_int("poly.degree", 4));
    ec.poly.block_size = static_cast<std::size_t>(cfg.get_int("poly.block", 500));
    ec.poly.ridge = cfg.get_double("poly.ridge", 0.0);

    const std::string kmode = cfg.get_string("kalman.mode", "oracle");
    if (kmode == "oracle") ec.kalman_use_mle = false;
    else if (kmode == "mle") ec.kalman_use_mle = true;
    else throw std::invalid_argument("kalman.mode must be oracle or mle");
    ec.mle_starts = static_cast<int>(cfg.get_int("kalman.starts", 32));

    ec.trials = static_cast<std::size_t>(cfg.get_int("run.trials", 5));
    ec.master_seed = static_cast<std::uint64_t>(cfg.get_int("run.seed", 20240901));
    ec.workers = static_cast<int>(cfg.get_int("run.workers", 4));
    ec.out_dir = cfg.get_string("run.out_dir", "");

    if (cfg.has("sweep.values")) ec.sweep_values = cfg.get_double_list("sweep.values");
    ec.bandwidth_hold = cfg.get_string("sweep.hold", "ndr");

    ec.evm_n_symbols = static_cast<std::size_t>(cfg.get_int("evm.n_symbols", 1 << 15));
    ec.evm_oversampling = static_cast<std::size_t>(cfg.get_int("evm.oversampling", 3));
    ec.evm_pilot_every = static_cast<std::size_t>(cfg.get_int("evm.pilot_every", 10));

    ec.psd_interferer_db = cfg.get_double("psd.interferer_db", 30.0);
    ec.welch_segment = static_cast<std::size_t>(cfg.get_int("psd.segment", 4096));
    ec.welch_overlap = cfg.get_double("psd.overlap", 0.5);

    ec.resample_half_width =
        static_cast<std::size_t>(cfg.get_int("signal.resample_half_width", 512));
    ec.deriv.half_length = static_cast<std::size_t>(cfg.get_int("signal.deriv_half_length", 512));
    ec.validate();
    return ec;
}

void ExperimentConfig::validate() const {
    if (trials < 1) throw std::invalid_argument("ExperimentConfig: trials must be >= 1");
    if (n < 1024) throw std::invalid_argument("ExperimentConfig: n must be >= 1024");
    if (t_s <= 0.0) throw std::invalid_argument("ExperimentConfig: t_s must be positive");
    if (w_hz <= 0.0 || w_hz > 0.5 / t_s * (1.0 + 1e-12))
        throw std::invalid_argument("ExperimentConfig: W exceeds Nyquist");
    if (!(phi > 0.0 && phi < 1.0)) throw std::invalid_argument("ExperimentConfig: phi in (0,1)");
    if (jitter_pct < 0.0) throw std::invalid_argument("ExperimentConfig: negative jitter");
    if (evm_oversampling < 1)
        throw std::invalid_argument("ExperimentConfig: oversampling must be a positive integer");
    poly.validate();
}

Ar1Params ExperimentConfig::resolve_params(double jitter_pct_override,
                                           double w_hz_override) const {
    Ar1Params p;
    p.phi = phi;
    p.sigma_eps = sigma_eps_for_percentage(jitter_pct_override, phi, t_s);
    switch (noise.kind) {
        case NoiseSpec::Kind::sigma_w:
            p.sigma_w = noise.value;
            break;
        case NoiseSpec::Kind::ndr_db:
            p.sigma_w = sigma_w_for_ndr(noise.value, p, power, w_hz_override);
            break;
        case NoiseSpec::Kind::sinadr_db:
            p.sigma_w = sigma_w_for_sinadr(noise.value, p, power, w_hz_override);
            break;
    }
    return p;
}

std::vector<PointAggregate> ExperimentResult::aggregate() const {
    std::vector<double> points;
    for (const auto& r : rows)
        if (std::find(points.begin(), points.end(), r.point) == points.end())
            points.push_back(r.point);
    std::vector<PointAggregate> out;
    for (double p : points) {
        PointAggregate agg;
        agg.point = p;
        std::vector<double> u, pl, ka;
        for (const auto& r : rows) {
            if (r.point != p || !r.error.empty()) continue;
            u.push_back(r.sinadr_uncomp_db);
            pl.push_back(r.sinadr_poly_db);
            ka.push_back(r.sinadr_kalman_db);
        }
        agg.trials = u.size();
        agg.mean_uncomp = mean_of(u);
        agg.mean_poly = mean_of(pl);
        agg.mean_kalman = mean_of(ka);
        agg.std_uncomp = std_of(u);
        agg.std_poly = std_of(pl);
        agg.std_kalman = std_of(ka);
        out.push_back(agg);
    }
    return out;
}

void ExperimentResult::write_csv(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("ExperimentResult: cannot open " + path);
    os << "scenario,point,trial,seed,sinadr_uncomp_db,sinadr_poly_db,sinadr_kalman_db,"
          "sinadr_kalman_oracle_db,theta_sigma_eps,theta_phi,theta_sigma_w,"
          "evm_uncomp,evm_poly,evm_kalman,delta_evm_poly_db,delta_evm_kalman_db,"
          "wall_ms,error\n";
    os.precision(12);
    for (const auto& r : rows) {
        os << r.scenario << ',' << r.point << ',' << r.trial << ',' << r.seed << ','
           << r.sinadr_uncomp_db << ',' << r.sinadr_poly_db << ',' << r.sinadr_kalman_db << ','
           << (r.have_theta ? r.sinadr_kalman_oracle_db : 0.0) << ','
           << r.theta_sigma_eps << ',' << r.theta_phi << ',' << r.theta_sigma_w << ','
           << r.evm_uncomp << ',' << r.evm_poly << ',' << r.evm_kalman << ','
           << r.delta_evm_poly_db << ',' << r.delta_evm_kalman_db << ','
           << r.wall_ms << ',' << r.error << '\n';
    }
}

void ExperimentResult::write_aggregate_csv(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("ExperimentResult: cannot open " + path);
    os << "point,trials,mean_uncomp,std_uncomp,mean_poly,std_poly,mean_kalman,std_kalman\n";
    os.precision(12);
    for (const auto& a : aggregate())
        os << a.point << ',' << a.trials << ',' << a.mean_uncomp << ',' << a.std_uncomp << ','
           << a.mean_poly << ',' << a.std_poly << ',' << a.mean_kalman << ',' << a.std_kalman
           << '\n';
}

void ExperimentResult::write_metrics_csv(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("ExperimentResult: cannot open " + path);
    os << "stage,seed,metric,value_db\n";
    os.precision(12);
    for (const auto& r : rows) {
        if (!r.error.empty()) continue;
        os << "uncompensated," << r.seed << ",sinadr," << r.sinadr_uncomp_db << '\n';
        os << "poly," << r.seed << ",sinadr," << r.sinadr_poly_db << '\n';
        os << "kalman," << r.seed << ",sinadr," << r.sinadr_kalman_db << '\n';
        if (r.have_evm) {
            os << "poly," << r.seed << ",delta_evm," << r.delta_evm_poly_db << '\n';
            os << "kalman," << r.seed << ",delta_evm," << r.delta_evm_kalman_db << '\n';
        }
    }
}

namespace {

struct PointSpec {
    double point = 0.0;      ///< sweep coordinate as reported
    double jitter_pct = 0.0;
    double w_hz = 0.0;
    std::size_t k_gap = 0;
    Ar1Params params;        ///< fully resolved (sigma_w included)
    bool estimate_theta = false;
    bool keep_oracle_column = false;
};

TrialRow run_sinadr_trial(const ExperimentConfig& cfg, const PointSpec& pt,
                          std::size_t point_idx, std::size_t trial) {
    const auto t0 = std::chrono::steady_clock::now();
    TrialRow row;
    row.scenario = to_string(cfg.scenario);
    row.point = pt.point;
    row.trial = trial;
    row.seed = derive_seed(cfg.master_seed, point_idx, trial, kStreamSignal);

    const auto x = generate_bandlimited_gaussian(
        cfg.n, cfg.t_s, pt.w_hz, cfg.power,
        derive_seed(cfg.master_seed, point_idx, trial, kStreamSignal), cfg.real_payload);
    const auto xi = ar1_generate(pt.params, cfg.n, cfg.t_s,
                                 derive_seed(cfg.master_seed, point_idx, trial, kStreamJitter));
    const auto y = make_observation(x, xi, pt.params.sigma_w, ObservationMode::exact,
                                    derive_seed(cfg.master_seed, point_idx, trial, kStreamNoise),
                                    cfg.resample_half_width, cfg.deriv);
    const auto yp = bandlimited_derivative(y, cfg.deriv);
    const auto sched = build_schedule(cfg.n, pt.k_gap, cfg.poly.block_size);
    const auto x_pilot = gather_pilot_values(x, sched);

    row.sinadr_uncomp_db = sinadr_empirical_db(x, y);

    const auto poly_out = dejitter_poly(y, yp, x_pilot, sched, cfg.poly);
    row.sinadr_poly_db = sinadr_empirical_db(x, poly_out.x_hat);

    Ar1Params kparams = pt.params;
    if (pt.estimate_theta) {
        const auto pm = pseudo_measure(y, yp, x_pilot, sched);
        auto prob = make_mle_problem(pm, pt.k_gap, cfg.mle_starts);
        const auto est = estimate_parameters(
            prob, derive_seed(cfg.master_seed, point_idx, trial, kStreamMle));
        kparams = est.theta_hat;
        row.have_theta = true;
        row.theta_sigma_eps = kparams.sigma_eps;
        row.theta_phi = kparams.phi;
        row.theta_sigma_w = kparams.sigma_w;
    }
    const auto km = dejitter_kalman(y, yp, x_pilot, sched, kparams);
    row.sinadr_kalman_db = sinadr_empirical_db(x, km.x_hat);

    if (pt.keep_oracle_column) {
        const auto km_oracle = dejitter_kalman(y, yp, x_pilot, sched, pt.params);
        row.sinadr_kalman_oracle_db = sinadr_empirical_db(x, km_oracle.x_hat);
    }

    row.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    return row;
}

std::vector<double> default_sweep(const ExperimentConfig& cfg) {
    switch (cfg.scenario) {
        case Scenario::ndr_sweep: {
            std::vector<double> v;
            for (double d = -20.0; d <= 10.0 + 1e-9; d += 2.5) v.push_back(d);
            return v;
        }
        case Scenario::density_sweep:
            return {0.01, 0.02, 0.04, 0.05, 0.10, 0.20};
        case Scenario::jitter_sweep:
            return {1e-3, 5e-3, 1.5e-2, 3e-2, 4.5e-2, 6e-2, 8e-2, 1e-1};
        case Scenario::bandwidth_sweep:
            return {0.1, 0.2, 0.3, 0.4, 0.45};  // fractions of f_s
        case Scenario::mle_vs_oracle:
            return {0.01, 0.05};
        default:
            return {0.0};
    }
}

}  // namespace

ExperimentResult run_scenario(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.scenario == Scenario::evm_pipeline) return run_evm_pipeline(cfg);
    if (cfg.scenario == Scenario::psd_stages) {
        const auto spectra = run_psd_stages(cfg);
        if (!cfg.out_dir.empty()) {
            std::filesystem::create_directories(cfg.out_dir);
            spectra.write_csv(cfg.out_dir + "/psd_stages.csv");
        }
        return {};
    }

    const auto sweep = cfg.sweep_values.empty() ? default_sweep(cfg) : cfg.sweep_values;
    std::vector<PointSpec> points;
    points.reserve(sweep.size());
    for (double v : sweep) {
        PointSpec pt;
        pt.point = v;
        pt.jitter_pct = cfg.jitter_pct;
        pt.w_hz = cfg.w_hz;
        pt.k_gap = cfg.pilots.resolve_k_gap();
        switch (cfg.scenario) {
            case Scenario::ndr_sweep: {
                ExperimentConfig tmp = cfg;
                tmp.noise = {NoiseSpec::Kind::ndr_db, v};
                pt.params = tmp.resolve_params();
                break;
            }
            case Scenario::density_sweep: {
                PilotSpec ps{PilotSpec::Kind::density, v};
                pt.k_gap = ps.resolve_k_gap();
                pt.params = cfg.resolve_params();
                break;
            }
            case Scenario::jitter_sweep: {
                // noise fixed at the level resolved for the lowest jitter
                const double lowest = *std::min_element(sweep.begin(), sweep.end());
                const auto base = cfg.resolve_params(lowest, cfg.w_hz);
                pt.jitter_pct = v;
                pt.params = cfg.resolve_params(v, cfg.w_hz);
                pt.params.sigma_w = base.sigma_w;
                break;
            }
            case Scenario::bandwidth_sweep: {
                pt.w_hz = v * (1.0 / cfg.t_s);  // sweep value = W / f_s
                if (cfg.bandwidth_hold == "snr") {
                    const auto base = cfg.resolve_params(cfg.jitter_pct, cfg.w_hz);
                    pt.params = base;
                } else {
                    pt.params = cfg.resolve_params(cfg.jitter_pct, pt.w_hz);
                }
                break;
            }
            case Scenario::mle_vs_oracle: {
                PilotSpec ps{PilotSpec::Kind::density, v};
                pt.k_gap = ps.resolve_k_gap();
                pt.params = cfg.resolve_params();
                pt.estimate_theta = true;
                pt.keep_oracle_column = true;
                break;
            }
            default:
                pt.params = cfg.resolve_params();
        }
        points.push_back(pt);
    }

    ExperimentResult result;
    result.rows.resize(points.size() * cfg.trials);
    parallel_for(result.rows.size(), cfg.workers, [&](std::size_t item) {
        const std::size_t point_idx = item / cfg.trials;
        const std::size_t trial = item % cfg.trials;
        try {
            result.rows[item] = run_sinadr_trial(cfg, points[point_idx], point_idx, trial);
        } catch (const std::exception& e) {
            TrialRow row;
            row.scenario = to_string(cfg.scenario);
            row.point = points[point_idx].point;
            row.trial = trial;
            row.error = e.what();
            result.rows[item] = row;
        }
    });

    if (!cfg.out_dir.empty()) {
        std::filesystem::create_directories(cfg.out_dir);
        result.write_csv(cfg.out_dir + "/results.csv");
        result.write_aggregate_csv(cfg.out_dir + "/aggregate.csv");
        result.write_metrics_csv(cfg.out_dir + "/metrics.csv");
    }
    return result;
}

ExperimentResult run_evm_pipeline(const ExperimentConfig& cfg) {
    cfg.validate();
    const std::size_t f = cfg.evm_oversampling;
    const std::size_t n = cfg.evm_n_symbols * f;
    if (cfg.evm_pilot_every < 2)
        throw std::invalid_argument("run_evm_pipeline: pilot_every must be >= 2");
    const double w_hz = 0.5 / (static_cast<double>(f) * cfg.t_s);  // symbol band edge

    ExperimentResult result;
    result.rows.resize(cfg.trials);
    parallel_for(cfg.trials, cfg.workers, [&](std::size_t trial) {
        TrialRow row;
        row.scenario = to_string(cfg.scenario);
        row.point = 1.0 / static_cast<double>(cfg.evm_pilot_every);
        row.trial = trial;
        row.seed = derive_seed(cfg.master_seed, 0, trial, kStreamSignal);
        const auto t0 = std::chrono::steady_clock::now();
        try {
            GaussianRng srng(row.seed);
            std::vector<cplx> symbols(cfg.evm_n_symbols);
            for (auto& s : symbols) s = cplx(srng(), 0.0);

            // sinc pulse shaping: zero-stuff and brickwall to the symbol band
            std::vector<cplx> up(n, cplx(0.0, 0.0));
            for (std::size_t i = 0; i < cfg.evm_n_symbols; ++i) up[i * f] = symbols[i];
            auto spec = fft::forward(up);
            const double keep = w_hz * (1.0 + 1e-12);
            for (std::size_t k = 0; k < n; ++k)
                if (std::abs(fft::bin_freq_hz(k, n, cfg.t_s)) > keep) spec[k] = 0.0;
            auto shaped = fft::inverse(spec);
            SampledSignal x;
            x.t_s = cfg.t_s;
            x.bandlimit_w = w_hz;
            x.is_real = true;
            x.samples.resize(n);
            for (std::size_t i = 0; i < n; ++i)
                x.samples[i] = cplx(shaped[i].real() * static_cast<double>(f), 0.0);

            Ar1Params params;
            params.phi = cfg.phi;
            params.sigma_eps = sigma_eps_for_percentage(cfg.jitter_pct, cfg.phi, cfg.t_s);
            const double sig_x2 = x.power();
            switch (cfg.noise.kind) {
                case NoiseSpec::Kind::sigma_w: params.sigma_w = cfg.noise.value; break;
                case NoiseSpec::Kind::ndr_db:
                    params.sigma_w = sigma_w_for_ndr(cfg.noise.value, params, sig_x2, w_hz);
                    break;
                case NoiseSpec::Kind::sinadr_db:
                    params.sigma_w = sigma_w_for_sinadr(cfg.noise.value, params, sig_x2, w_hz);
                    break;
            }

            const auto xi = ar1_generate(params, n, cfg.t_s,
                                         derive_seed(cfg.master_seed, 0, trial, kStreamJitter));
            const auto y = make_observation(
                x, xi, params.sigma_w, ObservationMode::exact,
                derive_seed(cfg.master_seed, 0, trial, kStreamNoise), cfg.resample_half_width,
                cfg.deriv);
            const auto yp = bandlimited_derivative(y, cfg.deriv);

            const std::size_t k_gap = cfg.evm_pilot_every * f - 1;
            const auto sched = build_schedule(n, k_gap, cfg.poly.block_size);
            const auto x_pilot = gather_pilot_values(x, sched);

            const auto poly_out = dejitter_poly(y, yp, x_pilot, sched, cfg.poly);
            Ar1Params kparams = params;
            if (cfg.kalman_use_mle) {
                const auto pm = pseudo_measure(y, yp, x_pilot, sched);
                auto prob = make_mle_problem(pm, k_gap, cfg.mle_starts);
                kparams = estimate_parameters(
                              prob, derive_seed(cfg.master_seed, 0, trial, kStreamMle))
                              .theta_hat;
                row.have_theta = true;
                row.theta_sigma_eps = kparams.sigma_eps;
                row.theta_phi = kparams.phi;
                row.theta_sigma_w = kparams.sigma_w;
            }
            const auto km = dejitter_kalman(y, yp, x_pilot, sched, kparams);

            // matched filter (same brickwall) + symbol-synchronous decimation
            const auto demod = [&](const SampledSignal& z) {
                auto zs = fft::forward(z.samples);
                for (std::size_t k = 0; k < n; ++k)
                    if (std::abs(fft::bin_freq_hz(k, n, cfg.t_s)) > keep) zs[k] = 0.0;
                const auto zf = fft::inverse(zs);
                std::vector<cplx> out(cfg.evm_n_symbols);
                for (std::size_t i = 0; i < cfg.evm_n_symbols; ++i) out[i] = zf[i * f];
                return out;
            };

            // EVM over every guarded symbol; keeping the pilot symbols in the
            // set makes the uncompensated EVM independent of pilot density
            const std::size_t guard_sym = std::max<std::size_t>(1, kDefaultMetricGuard / f);
            std::vector<std::size_t> data_idx;
            for (std::size_t i = guard_sym; i + guard_sym < cfg.evm_n_symbols; ++i)
                data_idx.push_back(i);

            const auto evm_of = [&](const SampledSignal& z) {
                const auto sh = demod(z);
                std::vector<cplx> ref, est;
                ref.reserve(data_idx.size());
                est.reserve(data_idx.size());
                for (std::size_t i : data_idx) {
                    ref.push_back(symbols[i]);
                    est.push_back(sh[i]);
                }
                const cplx alpha = ls_scale(ref, est);
                for (auto& v : est) v *= alpha;
                return evm(ref, est);
            };

            row.have_evm = true;
            row.evm_uncomp = evm_of(y);
            row.evm_poly = evm_of(poly_out.x_hat);
            row.evm_kalman = evm_of(km.x_hat);
            row.delta_evm_poly_db = delta_evm_db(row.evm_uncomp, row.evm_poly);
            row.delta_evm_kalman_db = delta_evm_db(row.evm_uncomp, row.evm_kalman);
            row.sinadr_uncomp_db = sinadr_empirical_db(x, y);
            row.sinadr_poly_db = sinadr_empirical_db(x, poly_out.x_hat);
            row.sinadr_kalman_db = sinadr_empirical_db(x, km.x_hat);
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        row.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
        result.rows[trial] = row;
    });

    if (!cfg.out_dir.empty()) {
        std::filesystem::create_directories(cfg.out_dir);
        result.write_csv(cfg.out_dir + "/results.csv");
        result.write_metrics_csv(cfg.out_dir + "/metrics.csv");
    }
    return result;
}

void StageSpectraResult::write_csv(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("StageSpectraResult: cannot open " + path);
    os << "stage,freq_hz,psd\n";
    os.precision(12);
    for (const auto& st : stages)
        for (std::size_t i = 0; i < st.spectrum.freq_hz.size(); ++i)
            os << st.stage << ',' << st.spectrum.freq_hz[i] << ',' << st.spectrum.psd[i] << '\n';
}

StageSpectraResult run_psd_stages(const ExperimentConfig& cfg) {
    cfg.validate();
    const std::size_t n = cfg.n;
    const double zeta_pow = cfg.power * db_to_linear(cfg.psd_interferer_db);

    const auto x = generate_bandlimited_gaussian(
        n, cfg.t_s, cfg.w_hz, cfg.power, derive_seed(cfg.master_seed, 0, 0, kStreamSignal),
        cfg.real_payload);
    const auto zeta = generate_bandlimited_gaussian(
        n, cfg.t_s, cfg.w_hz, zeta_pow, derive_seed(cfg.master_seed, 0, 0, kStreamInterferer),
        cfg.real_payload);

    Ar1Params params;
    params.phi = cfg.phi;
    params.sigma_eps = sigma_eps_for_percentage(cfg.jitter_pct, cfg.phi, cfg.t_s);
    // noise resolved against the composite distortion power
    switch (cfg.noise.kind) {
        case NoiseSpec::Kind::sigma_w: params.sigma_w = cfg.noise.value; break;
        case NoiseSpec::Kind::ndr_db:
            params.sigma_w = sigma_w_for_ndr(cfg.noise.value, params, cfg.power + zeta_pow,
                                             cfg.w_hz);
            break;
        case NoiseSpec::Kind::sinadr_db:
            params.sigma_w = sigma_w_for_sinadr(cfg.noise.value, params, cfg.power + zeta_pow,
                                                cfg.w_hz);
            break;
    }

    const auto xi = ar1_generate(params, n, cfg.t_s,
                                 derive_seed(cfg.master_seed, 0, 0, kStreamJitter));
    const auto xp = bandlimited_derivative(x, cfg.deriv);
    const auto zp = bandlimited_derivative(zeta, cfg.deriv);

    // z = x + xi x' + zeta + xi zeta' + w
    SampledSignal z = x;
    z.is_real = cfg.real_payload;
    for (std::size_t i = 0; i < n; ++i)
        z.samples[i] = x.samples[i] + zeta.samples[i] +
                       xi.xi[i] * (xp.samples[i] + zp.samples[i]);
    if (params.sigma_w > 0.0) {
        GaussianRng wr(derive_seed(cfg.master_seed, 0, 0, kStreamNoise));
        for (auto& v : z.samples) v += cplx(params.sigma_w * wr(), 0.0);
    }

    const auto zprime = bandlimited_derivative(z, cfg.deriv);
    const auto sched = build_schedule(n, cfg.pilots.resolve_k_gap(), cfg.poly.block_size);
    std::vector<cplx> pilot_ref;  // x + zeta is known at pilots
    pilot_ref.reserve(sched.indices.size());
    for (std::size_t idx : sched.indices)
        pilot_ref.push_back(x.samples[idx] + zeta.samples[idx]);

    const auto poly_out = dejitter_poly(z, zprime, pilot_ref, sched, cfg.poly);
    const auto km = dejitter_kalman(z, zprime, pilot_ref, sched, params);

    const auto minus_zeta = [&](const SampledSignal& s) {
        SampledSignal out = s;
        for (std::size_t i = 0; i < n; ++i) out.samples[i] -= zeta.samples[i];
        return out;
    };

    StageSpectraResult out;
    const auto add_stage = [&](const std::string& name, const SampledSignal& s) {
        out.stages.push_back({name, psd_welch(s, cfg.welch_segment, cfg.welch_overlap)});
    };
    const auto uncomp = minus_zeta(z);
    const auto comp_p = minus_zeta(poly_out.x_hat);
    const auto comp_k = minus_zeta(km.x_hat);
    add_stage("clean", x);
    add_stage("composite", z);
    add_stage("uncompensated", uncomp);
    add_stage("poly", comp_p);
    add_stage("kalman", comp_k);

    // jitter skirt power just outside the shared band
    const double lo = cfg.w_hz * 1.05, hi = cfg.w_hz * 1.5;
    out.skirt_power_uncomp = out.stages[2].spectrum.band_power(lo, hi);
    out.skirt_power_poly = out.stages[3].spectrum.band_power(lo, hi);
    out.skirt_power_kalman = out.stages[4].spectrum.band_power(lo, hi);
    return out;
}

}  // namespace dejitter
