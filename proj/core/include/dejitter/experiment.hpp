#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dejitter/config.hpp"
#include "dejitter/metrics.hpp"
#include "dejitter/poly.hpp"
#include "dejitter/signal.hpp"
#include "dejitter/types.hpp"

namespace dejitter {

enum class Scenario {
    ndr_sweep,
    density_sweep,
    jitter_sweep,
    bandwidth_sweep,
    mle_vs_oracle,
    evm_pipeline,
    psd_stages,
};

Scenario scenario_from_string(const std::string& name);
std::string to_string(Scenario s);

struct NoiseSpec {
    enum class Kind { sigma_w, ndr_db, sinadr_db } kind = Kind::ndr_db;
    double value = -10.0;
};

struct PilotSpec {
    enum class Kind { k_gap, density } kind = Kind::density;
    double value = 0.05;

    std::size_t resolve_k_gap() const;
};

struct ExperimentConfig {
    Scenario scenario = Scenario::ndr_sweep;

    // signal
    std::size_t n = 1u << 16;
    double t_s = 1e-8;
    double w_hz = 40e6;
    double power = 1.0;
    bool real_payload = true;

    // jitter: phi plus exactly one of {percentage, sigma_eps}
    double phi = 0.999;
    double jitter_pct = 1.5e-2;  ///< sigma_xi / t_s

    NoiseSpec noise;
    PilotSpec pilots;

    PolyConfig poly;
    bool kalman_use_mle = false;
    int mle_starts = 32;

    std::size_t trials = 5;
    std::uint64_t master_seed = 20240901;
    int workers = 4;
    std::string out_dir;

    std::vector<double> sweep_values;  ///< meaning depends on scenario
    std::string bandwidth_hold = "ndr";  ///< "ndr" or "snr" during bandwidth sweeps

    // evm_pipeline
    std::size_t evm_n_symbols = 1u << 15;
    std::size_t evm_oversampling = 3;
    std::size_t evm_pilot_every = 10;  ///< pilot-symbol spacing (density 1/value)

    // psd_stages
    double psd_interferer_db = 30.0;  ///< interferer power above the payload
    std::size_t welch_segment = 4096;
    double welch_overlap = 0.5;

    std::size_t resample_half_width = 512;
    DerivativeFilterSpec deriv;

    static ExperimentConfig from_config(const Config& cfg);
    void validate() const;

    /// Resolves the AR(1)+noise parameter triple for a given jitter
    /// percentage and bandwidth (noise solved from the configured spec).
    Ar1Params resolve_params(double jitter_pct_override, double w_hz_override) const;
    Ar1Params resolve_params() const { return resolve_params(jitter_pct, w_hz); }
};

struct TrialRow {
    std::string scenario;
    double point = 0.0;       ///< sweep coordinate
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    double sinadr_uncomp_db = 0.0;
    double sinadr_poly_db = 0.0;
    double sinadr_kalman_db = 0.0;
    // mle_vs_oracle extras
    bool have_theta = false;
    double theta_sigma_eps = 0.0, theta_phi = 0.0, theta_sigma_w = 0.0;
    double sinadr_kalman_oracle_db = 0.0;
    // evm extras
    bool have_evm = false;
    double evm_uncomp = 0.0, evm_poly = 0.0, evm_kalman = 0.0;
    double delta_evm_poly_db = 0.0, delta_evm_kalman_db = 0.0;
    double wall_ms = 0.0;
    std::string error;  ///< empty on success
};

struct PointAggregate {
    double point = 0.0;
    std::size_t trials = 0;
    double mean_uncomp = 0.0, mean_poly = 0.0, mean_kalman = 0.0;
    double std_uncomp = 0.0, std_poly = 0.0, std_kalman = 0.0;
};

struct ExperimentResult {
    std::vector<TrialRow> rows;
    std::vector<PointAggregate> aggregate() const;
    void write_csv(const std::string& path) const;
    void write_aggregate_csv(const std::string& path) const;
    /// Long-format metric table: stage,seed,metric,value_db
    void write_metrics_csv(const std::string& path) const;
};

/// Config-driven sweep runner. Deterministic given the master seed; trial
/// failures are recorded as rows with an error tag and the run continues.
ExperimentResult run_scenario(const ExperimentConfig& cfg);

/// Symbol pipeline: Gaussian symbols -> windowed-sinc pulse shaping (integer
/// oversampling, no ISI at symbol instants) -> jitter + noise -> both
/// dejitter algorithms -> matched filter + decimation + LS scale -> EVM.
ExperimentResult run_evm_pipeline(const ExperimentConfig& cfg);

struct StageSpectrum {
    std::string stage;
    WelchSpectrum spectrum;
};

struct StageSpectraResult {
    std::vector<StageSpectrum> stages;
    double skirt_power_uncomp = 0.0;  ///< out-of-band skirt power before compensation
    double skirt_power_poly = 0.0;
    double skirt_power_kalman = 0.0;
    void write_csv(const std::string& path) const;
};

/// Composite interferer scenario: z = x + xi x' + zeta + xi zeta' + w with a
/// strong co-channel interferer zeta known (with x) at pilots; the
/// interferer itself is removed by oracle subtraction after dejittering.
StageSpectraResult run_psd_stages(const ExperimentConfig& cfg);

}  // namespace dejitter
