#pragma once

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <unistd.h>
#include <vector>

#include "physcorrect/corrector.hpp"
#include "physcorrect/rollout.hpp"
#include "physcorrect/solvers.hpp"

namespace physcorrect {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::uint32_t kFormatVersion = 1;

/// Physical domain length assumed for each PDE; the file headers carry only
/// point counts.
inline double default_domain_length(PdeKind kind) { return kind == PdeKind::KuramotoSivashinsky ? 64.0 : 1.0; }

inline Grid default_grid(PdeKind kind, std::size_t n, std::optional<double> length = std::nullopt) {
    const double l = length.value_or(default_domain_length(kind));
    return kind == PdeKind::KuramotoSivashinsky ? Grid::periodic_1d(n, l) : Grid::periodic_2d(n, l);
}

namespace detail {

class ByteWriter {
public:
    void raw(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) { put(v, 2); }
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
    Bytes take() && { return std::move(out_); }

private:
    void put(std::uint64_t v, int width) {
        for (int b = 0; b < width; ++b) out_.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
    }
    Bytes out_;
};

class ByteReader {
public:
    ByteReader(const Bytes& data, std::string context) : data_(data), context_(std::move(context)) {}

    std::string raw(std::size_t count) {
        need(count);
        std::string s(reinterpret_cast<const char*>(data_.data() + pos_), count);
        pos_ += count;
        return s;
    }
    std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    double f64() { return std::bit_cast<double>(get(8)); }

    std::size_t remaining() const { return data_.size() - pos_; }
    [[noreturn]] void fail(const std::string& what) const { throw FormatError(context_ + ": " + what); }

private:
    void need(std::size_t count) const {
        if (remaining() < count) fail("truncated (needed " + std::to_string(count) + " more bytes)");
    }
    std::uint64_t get(int width) {
        need(static_cast<std::size_t>(width));
        std::uint64_t v = 0;
        for (int b = 0; b < width; ++b) v |= static_cast<std::uint64_t>(data_[pos_ + b]) << (8 * b);
        pos_ += static_cast<std::size_t>(width);
        return v;
    }

    const Bytes& data_;
    std::string context_;
    std::size_t pos_ = 0;
};

inline void check_magic_version(ByteReader& in, std::string_view magic) {
    if (in.raw(4) != magic) in.fail("bad magic (expected " + std::string(magic) + ")");
    const std::uint32_t version = in.u32();
    if (version != kFormatVersion) in.fail("unsupported version " + std::to_string(version));
}

inline void write_grid_dims(ByteWriter& out, const Grid& grid) {
    out.u8(static_cast<std::uint8_t>(grid.ndim()));
    for (int a = 0; a < grid.ndim(); ++a) out.u32(static_cast<std::uint32_t>(grid.n()));
}

inline std::size_t read_grid_dims(ByteReader& in, int& ndim) {
    ndim = in.u8();
    if (ndim != 1 && ndim != 2) in.fail("ndim must be 1 or 2, got " + std::to_string(ndim));
    const std::uint32_t n = in.u32();
    if (ndim == 2 && in.u32() != n) in.fail("non-square 2D grids are not supported");
    if (n < 4) in.fail("axis length below 4");
    return n;
}

inline PdeKind pde_from_tag(ByteReader& in, std::uint8_t tag) {
    if (tag > 2) in.fail("unknown pde tag " + std::to_string(tag));
    return static_cast<PdeKind>(tag);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Atomic file access
// ---------------------------------------------------------------------------

inline void write_file_atomic(const std::filesystem::path& path, const void* data, std::size_t size) {
    const std::filesystem::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        f.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
        f.flush();
        if (!f) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw std::runtime_error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

inline void write_file_atomic(const std::filesystem::path& path, const Bytes& bytes) {
    write_file_atomic(path, bytes.data(), bytes.size());
}

inline void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
    write_file_atomic(path, text.data(), text.size());
}

inline Bytes read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    return Bytes(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

// ---------------------------------------------------------------------------
// PHCT trajectories
// ---------------------------------------------------------------------------

inline Bytes encode_trajectory(const Trajectory& traj) {
    traj.validate();
    detail::ByteWriter out;
    out.raw("PHCT");
    out.u32(kFormatVersion);
    out.u8(static_cast<std::uint8_t>(traj.kind));
    detail::write_grid_dims(out, traj.grid);
    out.u32(static_cast<std::uint32_t>(traj.states.size()));
    out.f64(traj.dt);
    out.u16(static_cast<std::uint16_t>(traj.solver));
    out.u64(traj.seed);
    for (const Field& f : traj.states)
        for (double v : f.values()) out.f64(v);
    return std::move(out).take();
}

/// `length` overrides the per-PDE default domain length.
inline Trajectory decode_trajectory(const Bytes& bytes, const std::string& context = "PHCT",
                                    std::optional<double> length = std::nullopt) {
    detail::ByteReader in(bytes, context);
    detail::check_magic_version(in, "PHCT");
    const PdeKind kind = detail::pde_from_tag(in, in.u8());
    int ndim = 0;
    const std::size_t n = detail::read_grid_dims(in, ndim);
    if (ndim != (kind == PdeKind::KuramotoSivashinsky ? 1 : 2)) in.fail("ndim does not match the pde tag");
    const std::uint32_t count = in.u32();
    const double dt = in.f64();
    const std::uint16_t solver = in.u16();
    if (solver > static_cast<std::uint16_t>(SolverId::KsIntegratingFactorRk4)) in.fail("unknown solver id");
    const std::uint64_t seed = in.u64();
    if (!(dt > 0.0) || !std::isfinite(dt)) in.fail("dt must be positive");
    if (count < 2) in.fail("at least two states required");

    const Grid grid = default_grid(kind, n, length);
    const std::size_t per_state = grid.size();
    if (in.remaining() != static_cast<std::size_t>(count) * per_state * 8)
        in.fail("payload is " + std::to_string(in.remaining()) + " bytes, header implies " +
                std::to_string(static_cast<std::size_t>(count) * per_state * 8));
    Trajectory traj{kind, grid, dt, {}, static_cast<SolverId>(solver), seed};
    traj.states.reserve(count);
    for (std::uint32_t s = 0; s < count; ++s) {
        std::vector<double> v(per_state);
        for (double& x : v) x = in.f64();
        try {
            traj.states.emplace_back(grid, std::move(v));
        } catch (const NumericalError&) {
            in.fail("state " + std::to_string(s) + " contains non-finite values");
        }
    }
    return traj;
}

inline void write_trajectory(const std::filesystem::path& path, const Trajectory& traj) {
    write_file_atomic(path, encode_trajectory(traj));
}

inline Trajectory read_trajectory(const std::filesystem::path& path, std::optional<double> length = std::nullopt) {
    return decode_trajectory(read_file(path), path.string(), length);
}

// ---------------------------------------------------------------------------
// PHJC caches
// ---------------------------------------------------------------------------

inline Bytes encode_cache(const JacobianCache& cache) {
    detail::ByteWriter out;
    out.raw("PHJC");
    out.u32(kFormatVersion);
    out.u8(static_cast<std::uint8_t>(cache.representation));
    detail::write_grid_dims(out, cache.grid);
    out.f64(cache.truncation_tol);
    out.u64(cache.params_hash);
    const std::size_t total = cache.grid.size();
    if (cache.representation == CacheRepresentation::Dense) {
        if (static_cast<std::size_t>(cache.dense_pinv.rows()) != total ||
            static_cast<std::size_t>(cache.dense_pinv.cols()) != total)
            throw ContractError("encode_cache: dense matrix does not match grid");
        for (std::size_t r = 0; r < total; ++r)
            for (std::size_t c = 0; c < total; ++c)
                out.f64(cache.dense_pinv(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
    } else {
        if (cache.inverse_symbol.size() != total) throw ContractError("encode_cache: symbol table does not match grid");
        for (const auto& s : cache.inverse_symbol) {
            out.f64(s.real());
            out.f64(s.imag());
        }
    }
    return std::move(out).take();
}

/// Decodes a cache. The grid spacing is not stored; `length` (or the domain
/// default for the dimensionality) reconstructs it, and a wrong value shows up
/// as a params-hash mismatch in load_cache.
inline JacobianCache decode_cache(const Bytes& bytes, const std::string& context = "PHJC",
                                  std::optional<double> length = std::nullopt) {
    detail::ByteReader in(bytes, context);
    detail::check_magic_version(in, "PHJC");
    const std::uint8_t rep = in.u8();
    if (rep > 1) in.fail("unknown representation tag " + std::to_string(rep));
    int ndim = 0;
    const std::size_t n = detail::read_grid_dims(in, ndim);
    const double tol = in.f64();
    const std::uint64_t hash = in.u64();
    const Grid grid = default_grid(ndim == 1 ? PdeKind::KuramotoSivashinsky : PdeKind::NavierStokes, n, length);
    const std::size_t total = grid.size();

    JacobianCache cache{static_cast<CacheRepresentation>(rep), grid, {}, {}, tol, 0.0, hash, 0};
    if (cache.representation == CacheRepresentation::Dense) {
        if (in.remaining() != total * total * 8) in.fail("dense payload size does not match dims");
        cache.dense_pinv.resize(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(total));
        for (std::size_t r = 0; r < total; ++r)
            for (std::size_t c = 0; c < total; ++c)
                cache.dense_pinv(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = in.f64();
    } else {
        if (in.remaining() != total * 16) in.fail("symbol payload size does not match dims");
        cache.inverse_symbol.resize(total);
        for (auto& s : cache.inverse_symbol) {
            const double re = in.f64();
            const double im = in.f64();
            s = {re, im};
            if (s == 0.0) ++cache.truncated;
        }
    }
    return cache;
}

inline void write_cache(const std::filesystem::path& path, const JacobianCache& cache) {
    write_file_atomic(path, encode_cache(cache));
}

/// Loads a cache and checks it was built for `model`.
inline JacobianCache load_cache(const std::filesystem::path& path, const ResidualModel& model) {
    JacobianCache cache = decode_cache(read_file(path), path.string(), model.grid().length());
    if (!(cache.grid == model.grid()))
        throw FormatError(path.string() + ": cache grid " + cache.grid.describe() + " does not match model grid " +
                          model.grid().describe());
    if (cache.params_hash != model.params_hash())
        throw FormatError(path.string() + ": params hash mismatch (cache built for different parameters)");
    return cache;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline constexpr std::string_view kReportHeader =
    "step,time,rel_l2_baseline,rel_l2_corrected,residual_baseline,residual_corrected,predict_ns,correct_ns";
inline constexpr std::string_view kDiverged = "diverged";

inline std::string format_double(double v) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

inline double parse_double(std::string_view s, const std::string& context) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v))
        throw FormatError(context + ": not a finite decimal: '" + std::string(s) + "'");
    return v;
}

inline std::uint64_t parse_uint(std::string_view s, const std::string& context) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw FormatError(context + ": not an unsigned integer: '" + std::string(s) + "'");
    return v;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

/// One data row of the rollout report; empty optionals are written as "diverged".
struct ReportRow {
    std::uint64_t step = 0;
    double time = 0.0;
    std::optional<double> rel_l2_baseline;
    std::optional<double> rel_l2_corrected;
    std::optional<double> residual_baseline;
    std::optional<double> residual_corrected;
    std::uint64_t predict_ns = 0;
    std::uint64_t correct_ns = 0;

    friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

inline std::uint64_t to_ns(double seconds) { return static_cast<std::uint64_t>(std::llround(seconds * 1e9)); }

/// Pairs a baseline and a corrected report step by step. Timings come from
/// the corrected run.
inline std::vector<ReportRow> report_rows(const RolloutReport& baseline, const RolloutReport& corrected) {
    if (baseline.records.size() != corrected.records.size())
        throw ContractError("report_rows: reports have different lengths");
    std::vector<ReportRow> rows;
    rows.reserve(baseline.records.size());
    auto value = [](const StepRecord& r, double v) { return r.diverged ? std::optional<double>() : v; };
    for (std::size_t i = 0; i < baseline.records.size(); ++i) {
        const StepRecord& b = baseline.records[i];
        const StepRecord& c = corrected.records[i];
        rows.push_back({c.step, c.time, value(b, b.relative_l2), value(c, c.relative_l2), value(b, b.residual),
                        value(c, c.residual), to_ns(c.prediction_seconds), to_ns(c.correction_seconds)});
    }
    return rows;
}

inline std::string format_report_csv(const std::vector<ReportRow>& rows) {
    std::string out(kReportHeader);
    out += '\n';
    auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(kDiverged); };
    for (const ReportRow& r : rows) {
        out += std::to_string(r.step) + ',' + format_double(r.time) + ',' + opt(r.rel_l2_baseline) + ',' +
               opt(r.rel_l2_corrected) + ',' + opt(r.residual_baseline) + ',' + opt(r.residual_corrected) + ',' +
               std::to_string(r.predict_ns) + ',' + std::to_string(r.correct_ns) + '\n';
    }
    return out;
}

inline std::vector<ReportRow> parse_report_csv(std::string_view text, const std::string& context = "report") {
    std::vector<ReportRow> rows;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    auto opt = [&](std::string_view s, const std::string& where) {
        return s == kDiverged ? std::optional<double>() : std::optional<double>(parse_double(s, where));
    };
    while (pos < text.size()) {
        const std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) throw FormatError(context + ": last line is not newline-terminated");
        const std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        const std::string where = context + ":" + std::to_string(++line_no);
        if (line_no == 1) {
            if (line != kReportHeader) throw FormatError(where + ": unexpected header");
            continue;
        }
        const auto f = split_csv_line(line);
        if (f.size() != 8) throw FormatError(where + ": expected 8 columns, got " + std::to_string(f.size()));
        rows.push_back({parse_uint(f[0], where), parse_double(f[1], where), opt(f[2], where), opt(f[3], where),
                        opt(f[4], where), opt(f[5], where), parse_uint(f[6], where), parse_uint(f[7], where)});
    }
    if (line_no == 0) throw FormatError(context + ": empty report");
    return rows;
}

inline constexpr std::string_view kSensitivityHeader = "pde,pattern,level,seeds,post_mean,post_std";

inline std::string format_sensitivity_csv(const SensitivityTable& table) {
    std::string out(kSensitivityHeader);
    out += '\n';
    for (const SensitivityRow& r : table.rows)
        out += std::string(to_string(r.kind)) + ',' + to_string(r.pattern) + ',' + format_double(r.level) + ',' +
               std::to_string(r.seeds) + ',' + format_double(r.post_mean) + ',' + format_double(r.post_std) + '\n';
    return out;
}

inline SensitivityTable parse_sensitivity_csv(std::string_view text, const std::string& context = "sensitivity") {
    SensitivityTable table;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        const std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) throw FormatError(context + ": last line is not newline-terminated");
        const std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        const std::string where = context + ":" + std::to_string(++line_no);
        if (line_no == 1) {
            if (line != kSensitivityHeader) throw FormatError(where + ": unexpected header");
            continue;
        }
        const auto f = split_csv_line(line);
        if (f.size() != 6) throw FormatError(where + ": expected 6 columns");
        SensitivityRow row{};
        if (f[0] == "ns") row.kind = PdeKind::NavierStokes;
        else if (f[0] == "wave") row.kind = PdeKind::Wave;
        else if (f[0] == "ks") row.kind = PdeKind::KuramotoSivashinsky;
        else throw FormatError(where + ": unknown pde '" + std::string(f[0]) + "'");
        if (f[1] == "uncorrelated") row.pattern = NoisePattern::Uncorrelated;
        else if (f[1] == "grf") row.pattern = NoisePattern::CorrelatedGrf;
        else throw FormatError(where + ": unknown pattern '" + std::string(f[1]) + "'");
        row.level = parse_double(f[2], where);
        row.seeds = parse_uint(f[3], where);
        row.post_mean = parse_double(f[4], where);
        row.post_std = parse_double(f[5], where);
        table.rows.push_back(row);
    }
    return table;
}

/// Long-format timing table: one (section, n, metric, value) row per measurement.
struct BenchRow {
    std::string section;
    std::size_t n = 0;
    std::string metric;
    double value = 0.0;
};

inline std::vector<BenchRow> bench_rows(const CachingBenchmark& b) {
    return {{"caching", b.n, "dense_build_seconds", b.dense_build_seconds},
            {"caching", b.n, "spectral_build_seconds", b.spectral_build_seconds},
            {"caching", b.n, "prediction_per_step_seconds", b.prediction_per_step},
            {"caching", b.n, "cached_dense_per_step_seconds", b.cached_dense_per_step},
            {"caching", b.n, "cached_spectral_per_step_seconds", b.cached_spectral_per_step},
            {"caching", b.n, "exact_per_step_seconds", b.exact_per_step},
            {"caching", b.n, "ratio_exact_over_cached_dense", b.exact_over_cached_dense()},
            {"caching", b.n, "overhead_cached_spectral_over_prediction", b.spectral_overhead()},
            {"caching", b.n, "overhead_cached_dense_over_prediction", b.dense_overhead()}};
}

inline std::vector<BenchRow> bench_rows(const ScalingStudy& s) {
    std::vector<BenchRow> rows;
    for (const ScalingRow& r : s.rows) {
        if (!r.error.empty()) {
            rows.push_back({"scaling", r.n, "capacity_error", 1.0});
            continue;
        }
        rows.push_back({"scaling", r.n, "grid_points", static_cast<double>(r.points)});
        rows.push_back({"scaling", r.n, "dense_entries", static_cast<double>(r.dense_entries)});
        rows.push_back({"scaling", r.n, "dense_apply_seconds", r.dense_seconds});
        rows.push_back({"scaling", r.n, "spectral_apply_seconds", r.spectral_seconds});
    }
    if (std::isfinite(s.dense_slope)) rows.push_back({"scaling", 0, "dense_slope", s.dense_slope});
    if (std::isfinite(s.spectral_slope)) rows.push_back({"scaling", 0, "spectral_slope", s.spectral_slope});
    return rows;
}

inline std::string format_bench_csv(const std::vector<BenchRow>& rows) {
    std::string out = "section,n,metric,value\n";
    for (const BenchRow& r : rows)
        out += r.section + ',' + std::to_string(r.n) + ',' + r.metric + ',' + format_double(r.value) + '\n';
    return out;
}

}  // namespace physcorrect
