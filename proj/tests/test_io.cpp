#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>

#include "oracles.hpp"
#include "physcorrect/dataset.hpp"
#include "physcorrect/io.hpp"

using namespace physcorrect;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("physcorrect_io_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::vector<double> flat(const Field& f) { return {f.values().begin(), f.values().end()}; }

void put_u32(Bytes& b, std::size_t at, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b[at + i] = static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF);
}

}  // namespace

TEST(Phct, RoundTripIsByteIdentical) {
    DatasetConfig cfg;
    cfg.n = 16;
    cfg.steps = 3;
    cfg.ks.warmup_time = 1.0;
    for (PdeKind kind : {PdeKind::NavierStokes, PdeKind::Wave, PdeKind::KuramotoSivashinsky}) {
        const Trajectory t = generate_trajectory(kind, cfg, 2);
        const Bytes bytes = encode_trajectory(t);
        const Trajectory back = decode_trajectory(bytes);
        EXPECT_EQ(back.kind, t.kind);
        EXPECT_EQ(back.grid, t.grid);
        EXPECT_EQ(back.dt, t.dt);
        EXPECT_EQ(back.solver, t.solver);
        EXPECT_EQ(back.seed, t.seed);
        ASSERT_EQ(back.states.size(), t.states.size());
        for (std::size_t s = 0; s < t.states.size(); ++s) EXPECT_EQ(flat(back.states[s]), flat(t.states[s]));
        EXPECT_EQ(encode_trajectory(back), bytes);
    }
}

TEST(Phct, HeaderLayout) {
    const Grid g = Grid::periodic_2d(4, 1.0);
    const Trajectory t{PdeKind::Wave, g, 0.25, {Field::constant(g, 1.0), Field::constant(g, -2.0)}, SolverId::WaveFd4Rk4, 99};
    const Bytes b = encode_trajectory(t);
    EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "PHCT");
    EXPECT_EQ(static_cast<unsigned char>(b[4]), kFormatVersion);
    EXPECT_EQ(static_cast<unsigned char>(b[8]), 1u);
    double last = 0.0;
    std::memcpy(&last, b.data() + b.size() - 8, 8);
    EXPECT_EQ(last, -2.0);
}

TEST(Phct, CorruptionIsReported) {
    const Grid g = Grid::periodic_2d(4, 1.0);
    const Trajectory t{PdeKind::NavierStokes, g, 0.01, {Field(g), Field::constant(g, 1.0)}};
    const Bytes good = encode_trajectory(t);

    Bytes magic = good;
    magic[0] = 'X';
    EXPECT_THROW(decode_trajectory(magic), FormatError);

    Bytes version = good;
    put_u32(version, 4, kFormatVersion + 1);
    EXPECT_THROW(decode_trajectory(version), FormatError);

    Bytes truncated(good.begin(), good.end() - 1);
    EXPECT_THROW(decode_trajectory(truncated), FormatError);

    Bytes extra = good;
    extra.push_back(0);
    EXPECT_THROW(decode_trajectory(extra), FormatError);

    Bytes nan = good;
    const double bad = NAN;
    std::memcpy(nan.data() + nan.size() - 8, &bad, 8);
    EXPECT_THROW(decode_trajectory(nan), FormatError);

    EXPECT_THROW(decode_trajectory(Bytes{}), FormatError);
}

TEST(Phct, FileRoundTripAndMissingFile) {
    const fs::path dir = temp_dir("phct");
    const Grid g = Grid::periodic_1d(8, 64.0);
    const Trajectory t{PdeKind::KuramotoSivashinsky, g, 0.05, {oracle::random_field(g, 1), oracle::random_field(g, 2)}};
    write_trajectory(dir / "a.phct", t);
    EXPECT_EQ(read_file(dir / "a.phct"), encode_trajectory(t));
    EXPECT_EQ(flat(read_trajectory(dir / "a.phct").states[1]), flat(t.states[1]));
    EXPECT_THROW(read_trajectory(dir / "missing.phct"), std::runtime_error);
    for (const auto& e : fs::directory_iterator(dir)) EXPECT_EQ(e.path().extension(), ".phct");
    fs::remove_all(dir);
}

TEST(Phct, LengthOverrideControlsSpacing) {
    const Grid g = Grid::periodic_1d(8, 10.0);
    const Trajectory t{PdeKind::KuramotoSivashinsky, g, 0.05, {Field(g), Field(g)}};
    EXPECT_EQ(decode_trajectory(encode_trajectory(t), "t", 10.0).grid, g);
    EXPECT_NEAR(decode_trajectory(encode_trajectory(t)).grid.length(), 64.0, 1e-12);
}

TEST(Phjc, SpectralAndDenseRoundTrips) {
    const fs::path dir = temp_dir("phjc");
    for (const ResidualModel& m : {ResidualModel(NsParams::defaults(8)), ResidualModel(KsParams::defaults(16))}) {
        for (const JacobianCache& c : {build_spectral_cache(m), build_dense_cache(m)}) {
            const Bytes bytes = encode_cache(c);
            EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "PHJC");
            const JacobianCache back = decode_cache(bytes, "c", m.grid().length());
            EXPECT_EQ(back.representation, c.representation);
            EXPECT_EQ(back.params_hash, c.params_hash);
            EXPECT_EQ(back.truncation_tol, c.truncation_tol);
            EXPECT_EQ(encode_cache(back), bytes);
            write_cache(dir / "c.phjc", c);
            const JacobianCache loaded = load_cache(dir / "c.phjc", m);
            const Field r = oracle::random_field(m.grid(), 3);
            EXPECT_EQ(flat(loaded.apply(r)), flat(c.apply(r)));
        }
    }
    EXPECT_EQ(decode_cache(encode_cache(build_spectral_cache(ResidualModel(NsParams::defaults(8))))).truncated, 1u);
    fs::remove_all(dir);
}

TEST(Phjc, RejectsMismatchedModelAndCorruption) {
    const fs::path dir = temp_dir("phjc_bad");
    const ResidualModel m(NsParams::defaults(8));
    write_cache(dir / "c.phjc", build_spectral_cache(m));
    EXPECT_THROW(load_cache(dir / "c.phjc", ResidualModel(NsParams::defaults(8, 0.02))), FormatError);
    EXPECT_THROW(load_cache(dir / "c.phjc", ResidualModel(NsParams::defaults(16))), FormatError);
    EXPECT_THROW(load_cache(dir / "c.phjc", ResidualModel(WaveParams::defaults(8))), FormatError);

    const Bytes good = encode_cache(build_spectral_cache(m));
    Bytes magic = good;
    magic[3] = 'X';
    EXPECT_THROW(decode_cache(magic), FormatError);
    Bytes version = good;
    put_u32(version, 4, 0);
    EXPECT_THROW(decode_cache(version), FormatError);
    Bytes rep = good;
    rep[8] = 7;
    EXPECT_THROW(decode_cache(rep), FormatError);
    EXPECT_THROW(decode_cache(Bytes(good.begin(), good.end() - 3)), FormatError);
    fs::remove_all(dir);
}

TEST(AtomicWrite, ReplacesWithoutLeavingTemporaries) {
    const fs::path dir = temp_dir("atomic");
    write_file_atomic(dir / "x.txt", std::string("first"));
    write_file_atomic(dir / "x.txt", std::string("second"));
    const Bytes b = read_file(dir / "x.txt");
    EXPECT_EQ(std::string(b.begin(), b.end()), "second");
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++files;
    EXPECT_EQ(files, 1u);
    EXPECT_THROW(write_file_atomic(dir / "no" / "such" / "x.txt", std::string("y")), std::runtime_error);
    fs::remove_all(dir);
}

TEST(ReportCsv, RoundTripIncludingDivergence) {
    std::vector<ReportRow> rows{{0, 0.01, 1.5e-3, 2.25e-12, 0.125, 1e-15, 1200, 3400},
                                {1, 0.02, std::nullopt, 1e-300, 0.0, std::nullopt, 0, 0}};
    const std::string text = format_report_csv(rows);
    EXPECT_EQ(text.substr(0, text.find('\n')), kReportHeader);
    EXPECT_NE(text.find("diverged"), std::string::npos);
    EXPECT_EQ(parse_report_csv(text), rows);
    EXPECT_EQ(format_report_csv(parse_report_csv(text)), text);
}

TEST(ReportCsv, DoublesRoundTripExactly) {
    for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, 5e-324, -0.0, 1e-9 + 1e-25})
        EXPECT_EQ(parse_double(format_double(v), "t"), v);
}

TEST(ReportCsv, MalformedInput) {
    const std::string header = std::string(kReportHeader) + "\n";
    EXPECT_THROW(parse_report_csv(""), FormatError);
    EXPECT_THROW(parse_report_csv("step,time\n"), FormatError);
    EXPECT_THROW(parse_report_csv(header + "0,0.1,1,1,1,1,1\n"), FormatError);
    EXPECT_THROW(parse_report_csv(header + "0,0.1,x,1,1,1,1,1\n"), FormatError);
    EXPECT_THROW(parse_report_csv(header + "0,0.1,1,1,1,1,1,1"), FormatError);
    EXPECT_THROW(parse_report_csv(header + "-1,0.1,1,1,1,1,1,1\n"), FormatError);
}

TEST(ReportCsv, RowsFromReports) {
    RolloutReport base, corr;
    base.records = {{0, 0.01, 0.5, 2.0, 1e-3, 0.0, false}, {1, 0.02, 0.0, 0.0, 0.0, 0.0, true}};
    corr.records = {{0, 0.01, 0.25, 1e-9, 2e-3, 5e-6, false}, {1, 0.02, 0.3, 1e-9, 2e-3, 5e-6, false}};
    const auto rows = report_rows(base, corr);
    EXPECT_EQ(rows[0].rel_l2_baseline, 0.5);
    EXPECT_EQ(rows[0].rel_l2_corrected, 0.25);
    EXPECT_EQ(rows[0].predict_ns, 2000000u);
    EXPECT_EQ(rows[0].correct_ns, 5000u);
    EXPECT_FALSE(rows[1].rel_l2_baseline.has_value());
    EXPECT_EQ(rows[1].rel_l2_corrected, 0.3);
    corr.records.pop_back();
    EXPECT_THROW(report_rows(base, corr), ContractError);
}

TEST(SensitivityCsv, RoundTrip) {
    SensitivityTable t;
    t.rows = {{PdeKind::NavierStokes, NoisePattern::Uncorrelated, 1e-3, 8, 1.1e-5, 2e-7},
              {PdeKind::KuramotoSivashinsky, NoisePattern::CorrelatedGrf, 1.0, 8, 0.0256, 0.003}};
    const std::string text = format_sensitivity_csv(t);
    EXPECT_EQ(text.substr(0, text.find('\n')), kSensitivityHeader);
    const SensitivityTable back = parse_sensitivity_csv(text);
    ASSERT_EQ(back.rows.size(), 2u);
    EXPECT_EQ(back.at(NoisePattern::CorrelatedGrf, 1.0).post_mean, 0.0256);
    EXPECT_EQ(back.rows[0].kind, PdeKind::NavierStokes);
    EXPECT_EQ(format_sensitivity_csv(back), text);
    EXPECT_THROW(parse_sensitivity_csv("pde,pattern\n"), FormatError);
}
