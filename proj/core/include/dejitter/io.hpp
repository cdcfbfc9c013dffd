#pragma once

#include <string>
#include <vector>

#include "dejitter/pilots.hpp"
#include "dejitter/types.hpp"

namespace dejitter {

/// Binary signal record: 8-byte magic "DJLSIG01", u64 n, f64 t_s, f64 W,
/// u8 is_real + 7 pad bytes, then n interleaved (re, im) float64, all
/// little-endian.
void save_signal(const SampledSignal& x, const std::string& path);
SampledSignal load_signal(const std::string& path);

/// CSV: index,t_seconds,re,im
void signal_to_csv(const SampledSignal& x, const std::string& path);

/// CSV: index,xi_seconds[,cov]
void jitter_to_csv(const JitterTrace& xi, const std::string& path);

/// CSV: index (one pilot per row)
void schedule_to_csv(const PilotSchedule& sched, const std::string& path);

/// CSV: index,m,deriv_sq  (pseudo-measurements for `estimate`)
void measurements_to_csv(const PseudoMeasurements& pm, const std::string& path);

struct MeasurementFile {
    std::vector<std::size_t> indices;
    std::vector<double> m;
    std::vector<double> deriv_sq;
};
MeasurementFile load_measurements_csv(const std::string& path);

}  // namespace dejitter
