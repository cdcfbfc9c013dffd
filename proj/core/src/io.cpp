#include "dejitter/io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dejitter {

namespace {
constexpr char kMagic[9] = "DJLSIG01";

void write_u64(std::ofstream& os, std::uint64_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_f64(std::ofstream& os, double v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
}  // namespace

void save_signal(const SampledSignal& x, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_signal: cannot open " + path);
    os.write(kMagic, 8);
    write_u64(os, x.samples.size());
    write_f64(os, x.t_s);
    write_f64(os, x.bandlimit_w);
    char flags[8] = {};
    flags[0] = x.is_real ? 1 : 0;
    os.write(flags, 8);
    for (const auto& v : x.samples) {
        write_f64(os, v.real());
        write_f64(os, v.imag());
    }
    if (!os) throw std::runtime_error("save_signal: write failed for " + path);
}

SampledSignal load_signal(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_signal: cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("load_signal: bad magic in " + path);
    std::uint64_t n = 0;
    is.read(reinterpret_cast<char*>(&n), sizeof(n));
    SampledSignal x;
    is.read(reinterpret_cast<char*>(&x.t_s), sizeof(double));
    is.read(reinterpret_cast<char*>(&x.bandlimit_w), sizeof(double));
    char flags[8];
    is.read(flags, 8);
    x.is_real = flags[0] != 0;
    x.samples.resize(n);
    for (auto& v : x.samples) {
        double re = 0.0, im = 0.0;
        is.read(reinterpret_cast<char*>(&re), sizeof(double));
        is.read(reinterpret_cast<char*>(&im), sizeof(double));
        v = cplx(re, im);
    }
    if (!is) throw std::runtime_error("load_signal: truncated file " + path);
    return x;
}

void signal_to_csv(const SampledSignal& x, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("signal_to_csv: cannot open " + path);
    os << "index,t_seconds,re,im\n";
    os.precision(17);
    for (std::size_t i = 0; i < x.samples.size(); ++i)
        os << i << ',' << static_cast<double>(i) * x.t_s << ',' << x.samples[i].real() << ','
           << x.samples[i].imag() << '\n';
}

void jitter_to_csv(const JitterTrace& xi, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("jitter_to_csv: cannot open " + path);
    os << (xi.cov ? "index,xi_seconds,cov\n" : "index,xi_seconds\n");
    os.precision(17);
    for (std::size_t i = 0; i < xi.xi.size(); ++i) {
        os << i << ',' << xi.xi[i];
        if (xi.cov) os << ',' << (*xi.cov)[i];
        os << '\n';
    }
}

void schedule_to_csv(const PilotSchedule& sched, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("schedule_to_csv: cannot open " + path);
    os << "index\n";
    for (std::size_t idx : sched.indices) os << idx << '\n';
}

void measurements_to_csv(const PseudoMeasurements& pm, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("measurements_to_csv: cannot open " + path);
    os << "index,m,deriv_sq\n";
    os.precision(17);
    for (std::size_t c = 0; c < pm.m.size(); ++c) {
        if (!pm.reliable[c]) continue;
        os << pm.indices[c] << ',' << pm.m[c] << ','
           << pm.weights_basis[c] * pm.weights_basis[c] << '\n';
    }
}

MeasurementFile load_measurements_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_measurements_csv: cannot open " + path);
    MeasurementFile out;
    std::string line;
    bool header = true;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (header) {
            header = false;
            if (line.find("index") != std::string::npos) continue;  // skip header row
        }
        std::istringstream ss(line);
        std::string tok;
        std::getline(ss, tok, ',');
        out.indices.push_back(static_cast<std::size_t>(std::stoull(tok)));
        std::getline(ss, tok, ',');
        out.m.push_back(std::stod(tok));
        std::getline(ss, tok, ',');
        out.deriv_sq.push_back(std::stod(tok));
    }
    if (out.m.empty()) throw std::runtime_error("load_measurements_csv: no rows in " + path);
    return out;
}

}  // namespace dejitter
