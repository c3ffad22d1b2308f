#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "qtrack/error.hpp"
#include "qtrack/io.hpp"

namespace qtrack::harness {

/// One long-format result row.
struct ResultRow {
    std::string experiment;
    double k = 0.0;     // 2 pi k / omega_x
    double sigma = 0.0; // percent
    std::string method;
    double t_cycles = 0.0;
    std::string statistic;
    double value = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;

    auto key() const { return std::tie(experiment, k, sigma, method, t_cycles, statistic); }
};

inline constexpr const char* kResultHeader = "experiment,k,sigma,method,t_cycles,statistic,value,stderr,n";
inline constexpr int kResultSchemaVersion = 1;

/// Minimum sample size before an aggregate is trusted without a warning row.
inline constexpr std::size_t kMinTrustedN = 10;

class ResultTable {
public:
    void add(ResultRow row) { rows_.push_back(std::move(row)); }

    /// Mean of samples with stderr = sample_std / sqrt(n); adds a warning row when n is small.
    void add_mean(const ResultRow& proto, const std::vector<double>& samples) {
        ResultRow r = proto;
        r.n = samples.size();
        if (r.n > 0) {
            double m = 0.0;
            for (double v : samples) m += v;
            m /= static_cast<double>(r.n);
            double ss = 0.0;
            for (double v : samples) ss += (v - m) * (v - m);
            r.value = m;
            r.stderr_ = r.n > 1 ? std::sqrt(ss / static_cast<double>(r.n - 1)) / std::sqrt(static_cast<double>(r.n)) : 0.0;
        } else {
            r.value = std::nan("");
        }
        add(r);
        warn_if_small(proto, r.n);
    }

    /// Root mean square of samples; stderr by the delta method on the mean square.
    void add_rms(const ResultRow& proto, const std::vector<double>& samples) {
        ResultRow r = proto;
        r.n = samples.size();
        if (r.n > 0) {
            double m2 = 0.0;
            for (double v : samples) m2 += v * v;
            m2 /= static_cast<double>(r.n);
            double ss = 0.0;
            for (double v : samples) ss += (v * v - m2) * (v * v - m2);
            const double se_m2 =
                r.n > 1 ? std::sqrt(ss / static_cast<double>(r.n - 1)) / std::sqrt(static_cast<double>(r.n)) : 0.0;
            r.value = std::sqrt(m2);
            r.stderr_ = r.value > 0.0 ? se_m2 / (2.0 * r.value) : 0.0;
        } else {
            r.value = std::nan("");
        }
        add(r);
        warn_if_small(proto, r.n);
    }

    void add_count(const ResultRow& proto, std::size_t count, std::size_t n) {
        ResultRow r = proto;
        r.value = static_cast<double>(count);
        r.n = n;
        add(r);
    }

    const std::vector<ResultRow>& rows() const noexcept { return rows_; }
    bool empty() const noexcept { return rows_.empty(); }

    /// Rows sorted by key. Throws if two rows share a key.
    std::vector<ResultRow> sorted() const {
        auto out = rows_;
        std::stable_sort(out.begin(), out.end(), [](const ResultRow& a, const ResultRow& b) { return a.key() < b.key(); });
        for (std::size_t i = 1; i < out.size(); ++i)
            if (out[i].key() == out[i - 1].key())
                throw Error(ErrorKind::InvalidArgument, "duplicate result key for statistic '" + out[i].statistic + "'");
        return out;
    }

    const ResultRow* find(const std::string& method, double k, double sigma, double t_cycles,
                          const std::string& statistic) const {
        for (const auto& r : rows_)
            if (r.method == method && r.k == k && r.sigma == sigma && r.t_cycles == t_cycles && r.statistic == statistic)
                return &r;
        return nullptr;
    }

    void merge(const ResultTable& other) {
        rows_.insert(rows_.end(), other.rows_.begin(), other.rows_.end());
    }

private:
    void warn_if_small(const ResultRow& proto, std::size_t n) {
        if (n >= kMinTrustedN) return;
        ResultRow w = proto;
        w.statistic = proto.statistic + ":warning_low_n";
        w.value = static_cast<double>(n);
        w.n = n;
        add(w);
    }

    std::vector<ResultRow> rows_;
};

enum class OutputFormat { Csv, Json };

inline void write_csv(std::ostream& os, const ResultTable& table) {
    os << kResultHeader << '\n';
    for (const auto& r : table.sorted()) {
        os << r.experiment << ',' << io::fmt(r.k) << ',' << io::fmt(r.sigma) << ',' << r.method << ','
           << io::fmt(r.t_cycles) << ',' << r.statistic << ',' << io::fmt(r.value) << ',' << io::fmt(r.stderr_) << ','
           << r.n << '\n';
    }
}

inline void write_json(std::ostream& os, const ResultTable& table) {
    nlohmann::ordered_json doc;
    doc["schema_version"] = kResultSchemaVersion;
    doc["columns"] = {"experiment", "k", "sigma", "method", "t_cycles", "statistic", "value", "stderr", "n"};
    auto rows = nlohmann::ordered_json::array();
    for (const auto& r : table.sorted()) {
        // NaN has no JSON literal; emit null.
        auto num = [](double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(); };
        rows.push_back({r.experiment, r.k, r.sigma, r.method, r.t_cycles, r.statistic, num(r.value), num(r.stderr_), r.n});
    }
    doc["rows"] = std::move(rows);
    os << doc.dump(2) << '\n';
}

inline void emit_results(const ResultTable& table, const std::filesystem::path& path, OutputFormat format) {
    auto os = io::open_out(path);
    if (format == OutputFormat::Csv) write_csv(os, table);
    else write_json(os, table);
    os.flush();
    if (!os) throw Error(ErrorKind::Io, "failed writing '" + path.string() + "'");
}

} // namespace qtrack::harness
