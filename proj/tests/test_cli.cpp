#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "l1surface/error.hpp"
#include "oracles.hpp"

namespace l1surface::cli {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("l1surface_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    void write(const std::string& name, const std::string& text) const { std::ofstream(dir_ / name) << text; }

    std::string read(const std::string& name) const {
        std::ifstream f(dir_ / name);
        std::stringstream ss;
        ss << f.rdbuf();
        return ss.str();
    }

    void write_quotes(double bump = 0.0) const {
        std::ostringstream os;
        os.precision(17);
        os << "maturity,strike,bid,ask\n";
        for (double t : {0.25, 0.5, 1.0})
            for (int i = 0; i < 9; ++i) {
                const double k = 80.0 + 5.0 * i;
                double c = oracle::bs_call(100.0, k, t, 0.0, 0.0, 0.2);
                if (t == 0.5 && k == 100.0) c += bump;
                os << t << ',' << k << ',' << c << ',' << c << '\n';
            }
        write("quotes.csv", os.str());
    }

    void write_config(const std::string& extra = "") const {
        const std::string band =
            extra.find("tolerance") == std::string::npos ? "tolerance = absolute\nepsilon = 0.05\n" : "";
        write("run.ini", "# small grid\nquotes = " + path("quotes.csv") +
                             "\nspot = 100\ngrid_strikes = 60\ngrid_maturities = 8\norder_t = 5\norder_k = 10\n"
                             "output = " + path("out") + "\n" + band + extra);
    }

    int run_cli(std::vector<std::string> args) {
        args.insert(args.begin(), "l1surface");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        out_.str("");
        err_.str("");
        return run(static_cast<int>(argv.size()), argv.data(), out_, err_);
    }

    fs::path dir_;
    std::ostringstream out_;
    std::ostringstream err_;
};

TEST_F(CliTest, FitWritesEveryExport) {
    write_quotes();
    write_config();
    ASSERT_EQ(run_cli({"fit", "--config", path("run.ini")}), ok) << err_.str();
    for (const char* f : {"audit.json", "surface.csv", "coefficients.csv", "diagnostics.csv"})
        EXPECT_TRUE(fs::exists(dir_ / "out" / f)) << f;
    EXPECT_FALSE(fs::exists(dir_ / "out" / "lp.txt"));
    const std::string report = read("out/audit.json");
    EXPECT_NE(report.find("\"status\": \"optimal\""), std::string::npos);
    EXPECT_NE(report.find("\"lp_vars\": 100"), std::string::npos);
    EXPECT_NE(out_.str().find("audit pass"), std::string::npos);
    EXPECT_EQ(read("out/surface.csv").substr(0, 6), "T,K,C\n");
}

TEST_F(CliTest, OverridesAndLpExport) {
    write_quotes();
    write_config();
    ASSERT_EQ(run_cli({"fit", "--config", path("run.ini"), "--export_lp", "true", "--export_diagnostics", "false",
                       "--epsilon", "0.1"}),
              ok)
        << err_.str();
    EXPECT_TRUE(fs::exists(dir_ / "out" / "lp.txt"));
    EXPECT_TRUE(fs::exists(dir_ / "out" / "system.txt"));
    EXPECT_FALSE(fs::exists(dir_ / "out" / "diagnostics.csv"));
}

TEST_F(CliTest, AuditAndDiagnosticsOnExportedSurface) {
    write_quotes();
    write_config();
    ASSERT_EQ(run_cli({"fit", "--config", path("run.ini")}), ok) << err_.str();
    EXPECT_EQ(run_cli({"audit", "--surface", path("out/surface.csv"), "--spot", "100", "--out", path("a.json")}), ok)
        << out_.str() << err_.str();
    EXPECT_TRUE(fs::exists(dir_ / "a.json"));
    EXPECT_EQ(run_cli({"diagnostics", "--surface", path("out/surface.csv"), "--config", path("run.ini"), "--out",
                       path("d.csv")}),
              ok)
        << err_.str();
    const std::string d = read("d.csv");
    EXPECT_EQ(std::count(d.begin(), d.end(), '\n'), 1 + 8 * 60);
}

TEST_F(CliTest, InfeasibleExitCode) {
    write_quotes(1.0);
    write_config("tolerance = absolute\nepsilon = 0\n");
    EXPECT_EQ(run_cli({"fit", "--config", path("run.ini")}), infeasible);
    EXPECT_NE(err_.str().find("butterfly"), std::string::npos);
    const std::string report = read("out/audit.json");
    EXPECT_NE(report.find("\"infeasible_family\": \"butterfly\""), std::string::npos);
}

TEST_F(CliTest, RelaxToFeasibleTakesAValue) {
    write_quotes();
    write_config("tolerance = absolute\nepsilon = 1e-4\n");
    ASSERT_EQ(run_cli({"fit", "--config", path("run.ini"), "--relax_to_feasible", "true", "--export_diagnostics",
                       "false"}),
              ok)
        << err_.str();
    EXPECT_EQ(read("out/audit.json").find("\"band_scale\": 1.0,"), std::string::npos);
}

TEST_F(CliTest, AuditFailureExitCode) {
    write("bad.csv", "T,K,C\n0.5,90,12\n0.5,100,9\n0.5,110,1\n");  // concave at 100
    EXPECT_EQ(run_cli({"audit", "--surface", path("bad.csv"), "--spot", "100"}), audit_failed);
    EXPECT_NE(out_.str().find("FAIL"), std::string::npos);
}

TEST_F(CliTest, ConfigurationErrors) {
    write_quotes();
    write_config("no_such_key = 3\n");
    EXPECT_EQ(run_cli({"fit", "--config", path("run.ini")}), io_error);
    EXPECT_EQ(run_cli({"fit", "--config", path("missing.ini")}), io_error);
    EXPECT_EQ(run_cli({}), io_error);
    EXPECT_EQ(run_cli({"audit", "--surface", path("nothing.csv"), "--spot", "100"}), io_error);
    EXPECT_EQ(run_cli({"--help"}), ok);
    EXPECT_NE(out_.str().find("fit"), std::string::npos);
}

TEST_F(CliTest, ConfigMapping) {
    write_quotes();
    write_config("mode = fx\ntolerance = bid_ask\nalphas = 1,2\ncaps = discounted_forward\n");
    const RunConfig rc = load_run_config(path("run.ini"), {"--poly_orders", "3"});
    EXPECT_EQ(rc.mode, "fx");
    EXPECT_EQ(rc.poly_orders, 3u);
    ASSERT_EQ(rc.alphas.size(), 2u);
    const RecoveryConfig cfg = to_recovery_config(rc);
    EXPECT_EQ(cfg.mode, RecoveryMode::fx_per_slice);
    EXPECT_EQ(cfg.tolerance.mode, ToleranceMode::bid_ask);
    EXPECT_EQ(cfg.no_arbitrage.caps, CapConvention::discounted_forward);
    EXPECT_EQ(cfg.grid_strikes, 60u);
    EXPECT_THROW(load_run_config(path("nope.ini")), ParseError);
}

}  // namespace
}  // namespace l1surface::cli
