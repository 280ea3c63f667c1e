#include "cli_app.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace csqfi;
using namespace csqfi::cli;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out, err;
};

Run run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Run r;
  r.code = run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::vector<std::string> data_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string line; std::getline(is, line);)
    if (!line.empty() && line[0] != '#') out.push_back(line);
  return out;
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  for (auto f : split(line, ',')) out.emplace_back(f);
  return out;
}

std::map<std::string, std::string> records(const std::string& text) {
  std::map<std::string, std::string> out;
  for (const auto& line : data_lines(text)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("csqfi_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Format, ShortestRoundTrip) {
  EXPECT_EQ(fmt(0.1), "0.1");
  EXPECT_EQ(fmt(4.0), "4");
  EXPECT_EQ(fmt(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(fmt(std::nan("")), "nan");
  const double x = 8.513233330368077;
  EXPECT_EQ(std::stod(fmt(x)), x);
}

TEST(ParseAxis, Forms) {
  const auto a = parse_axis("r:0.01:10", std::nullopt, false);
  EXPECT_EQ(a.var, optimize::Variable::r);
  EXPECT_EQ(a.count, 400u);
  EXPECT_EQ(a.spacing, optimize::Spacing::log);

  const auto b = parse_axis("0.1:2:5", optimize::Variable::r, true);
  EXPECT_EQ(b.var, optimize::Variable::r);
  EXPECT_EQ(b.count, 5u);
  EXPECT_EQ(b.spacing, optimize::Spacing::linear);

  const auto c = parse_axis("theta:0:pi:7", std::nullopt, true);
  EXPECT_EQ(c.hi, std::numbers::pi);

  EXPECT_EQ(parse_axis("nu:1:2:3:log", std::nullopt, true).spacing, optimize::Spacing::log);
  EXPECT_THROW(parse_axis("r:1:1", std::nullopt, false), UsageError);
  EXPECT_THROW(parse_axis("0.1:1:0", optimize::Variable::r, true), UsageError);
  EXPECT_THROW(parse_axis("0.1:1", optimize::Variable::r, true), UsageError);
  EXPECT_THROW(parse_axis("x:0:1:3", std::nullopt, true), UsageError);
  EXPECT_THROW(parse_axis("r:0:1:3:cubic", std::nullopt, true), UsageError);
  EXPECT_THROW(parse_axis("r:a:1:3", std::nullopt, true), UsageError);
}

TEST(ParsePol, PresetsAndWeights) {
  EXPECT_EQ(parse_pol("radial"), response::Polarization::pure(response::Component::radial));
  EXPECT_EQ(parse_pol("z"), response::Polarization::pure(response::Component::parallel));
  const auto mixed = parse_pol("0.5:0.25:0.25");
  EXPECT_EQ(pol_label(mixed), "0.5:0.25:0.25");
  EXPECT_THROW(parse_pol("sideways"), UsageError);
  EXPECT_THROW(parse_pol("0.5:0.6:0.1"), DomainError);
}

TEST(RecordedCommand, DropsPlacementOptions) {
  EXPECT_EQ(recorded_command({"--cache", "c.txt", "qfi", "--jobs=3", "--pol", "radial", "-o",
                              "x.csv", "-j", "2", "--output=y"}),
            "csqfi qfi --pol radial");
  EXPECT_EQ(recorded_command({"figure", "fig3", "--out", "dir"}), "csqfi figure fig3");
}

TEST(ResponseCommand, Examples) {
  const auto z = run_cli({"response", "--component", "z", "--r", "0.001", "--nu", "1.5"});
  ASSERT_EQ(z.code, 0) << z.err;
  const auto lines = data_lines(z.out);
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0], "component,r_tilde,nu,f,df_dnu,trunc_error,quad_error");
  EXPECT_NEAR(std::stod(fields(lines[1])[3]), 1.5, 1e-5);

  const auto flat = run_cli({"response", "--component", "r", "--r", "0.5", "--nu", "1"});
  ASSERT_EQ(flat.code, 0);
  EXPECT_NEAR(std::stod(fields(data_lines(flat.out)[1])[3]), 1.0, 1e-6);
}

TEST(ResponseCommand, Sweeps) {
  const auto r = run_cli({"response", "--component", "a", "--nu", "1.5", "--sweep", "0.1:1:4"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(data_lines(r.out).size(), 5u);
  const auto nu = run_cli({"response", "--component", "a", "--r", "0.3", "--sweep", "nu:1:2:3"});
  ASSERT_EQ(nu.code, 0) << nu.err;
  EXPECT_EQ(fields(data_lines(nu.out)[3])[2], "2");

  EXPECT_EQ(run_cli({"response", "--component", "r", "--nu", "1.5", "--sweep", "0.1:1:0"}).code,
            kExitUsage);
  EXPECT_EQ(run_cli({"response", "--component", "r", "--nu", "1.5"}).code, kExitUsage);
  EXPECT_EQ(run_cli({"response", "--component", "q", "--r", "1", "--nu", "1.5"}).code, kExitUsage);
  EXPECT_EQ(run_cli({"response", "--component", "r", "--r", "0.5", "--nu", "0.5"}).code,
            kExitDomain);
  EXPECT_EQ(run_cli({"response", "--component", "r", "--r", "40", "--nu", "1.5"}).code,
            kExitDomain);
}

TEST(QfiCommand, Examples) {
  const std::vector<std::string> base = {"qfi", "--pol", "radial", "--r", "0.14", "--nu", "1.5",
                                         "--tau", "4"};
  auto with = [&](std::vector<std::string> extra) {
    auto a = base;
    a.insert(a.end(), extra.begin(), extra.end());
    return run_cli(a);
  };
  const auto peak = with({"--theta", "0"});
  ASSERT_EQ(peak.code, 0) << peak.err;
  const auto row = fields(data_lines(peak.out)[1]);
  EXPECT_EQ(row[0], "radial");
  EXPECT_NEAR(std::stod(row[5]), 8.513, 0.02 * 8.513);
  EXPECT_NEAR(std::stod(row[6]), 1.0 / std::stod(row[5]), 1e-12);

  const auto ground = with({"--theta", "3.14159265"});
  EXPECT_NEAR(std::stod(fields(data_lines(ground.out)[1])[5]), 0.0, 1e-15);

  const auto zero = run_cli({"qfi", "--pol", "parallel", "--r", "1", "--nu", "2", "--tau", "0",
                             "--theta", "0"});
  EXPECT_EQ(fields(data_lines(zero.out)[1])[5], "0");
  EXPECT_EQ(fields(data_lines(zero.out)[1])[6], "inf");
}

TEST(QfiCommand, HeaderAndColumns) {
  const auto r = run_cli({"qfi", "--pol", "t", "--r", "0.2", "--nu", "1.5", "--tau", "1",
                          "--theta", "0.5", "--jobs", "2"});
  ASSERT_EQ(r.code, 0);
  std::istringstream is(r.out);
  std::string l1, l2, l3, l4, l5, l6;
  std::getline(is, l1);
  std::getline(is, l2);
  std::getline(is, l3);
  std::getline(is, l4);
  std::getline(is, l5);
  std::getline(is, l6);
  EXPECT_EQ(l1, std::string("# csqfi ") + CSQFI_VERSION);
  EXPECT_EQ(l2, "# command: csqfi qfi --pol t --r 0.2 --nu 1.5 --tau 1 --theta 0.5");
  EXPECT_NE(l4.find("gamma_total/2"), std::string::npos);
  EXPECT_NE(l5.find("c/omega0"), std::string::npos);
  EXPECT_EQ(l6, kQfiColumns);
}

TEST(QfiCommand, GridSweepIsRowMajor) {
  const auto r = run_cli({"qfi", "--pol", "radial", "--r", "0.1", "--nu", "1.5", "--sweep",
                          "tau:0:4:3", "--sweep", "theta:0:pi:2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = data_lines(r.out);
  ASSERT_EQ(lines.size(), 7u);
  EXPECT_EQ(fields(lines[1])[3], "0");
  EXPECT_EQ(fields(lines[2])[3], "0");
  EXPECT_EQ(fields(lines[3])[3], "2");
  EXPECT_EQ(fields(lines[6])[5], "0");  // tau = 4, theta = pi
}

TEST(QfiCommand, UsageAndDomainErrors) {
  EXPECT_EQ(run_cli({"qfi", "--pol", "radial", "--r", "0.1", "--nu", "1.5", "--tau", "1"}).code,
            kExitUsage);
  EXPECT_EQ(run_cli({"qfi", "--pol", "radial", "--r", "0.1", "--nu", "1.5", "--tau", "1",
                     "--theta", "0", "--sweep", "tau:0:1:3"})
                .code,
            kExitUsage);
  const auto bad = run_cli({"qfi", "--pol", "radial", "--r", "0.1", "--nu", "0.9", "--tau", "1",
                            "--theta", "0"});
  EXPECT_EQ(bad.code, kExitDomain);
  EXPECT_NE(bad.err.find("failed"), std::string::npos);
  EXPECT_EQ(run_cli({"qfi", "--pol", "radial", "--r", "0.1", "--nu", "1.5", "--tau", "1",
                     "--theta", "4"})
                .code,
            kExitDomain);
  EXPECT_EQ(run_cli({}).code, kExitUsage);
  EXPECT_EQ(run_cli({"bogus"}).code, kExitUsage);
  EXPECT_EQ(run_cli({"--help"}).code, kExitOk);
}

TEST(FigureCommand, UnknownFigure) {
  EXPECT_EQ(run_cli({"figure", "fig9"}).code, kExitUsage);
  EXPECT_EQ(run_cli({"figure", "fig3", "--density", "1"}).code, kExitUsage);
}

TEST(FigureCommand, WritesPanelsAndManifest) {
  const auto dir = scratch("figure");
  const auto r = run_cli({"figure", "fig3", "--out", dir.string(), "--density", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* pol : {"radial", "tangential", "parallel"}) {
    const auto text = slurp(dir / (std::string("fig3_") + pol + ".csv"));
    const auto lines = data_lines(text);
    ASSERT_EQ(lines.size(), 26u);
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const auto f = fields(lines[i]);
      EXPECT_EQ(f[0], pol);
      EXPECT_EQ(f[1], "0.1");
      EXPECT_EQ(f[2], "1.5");
      if (i % 5 == 0) {
        EXPECT_EQ(f[5], "0") << lines[i];  // theta = pi column
      }
    }
  }
  const auto manifest = records(slurp(dir / "fig3_manifest.txt"));
  EXPECT_EQ(manifest.at("figure"), "fig3");
  EXPECT_EQ(manifest.at("scheme"), std::string(response::kSchemeVersion));
  EXPECT_EQ(manifest.at("fixed.r"), "0.1");
  EXPECT_EQ(manifest.at("fixed.nu"), "1.5");
  EXPECT_EQ(manifest.at("axis.1"), "theta:0:3.141592653589793:5:linear");
}

TEST(FigureCommand, CurvesForEachNu) {
  const auto dir = scratch("fig5");
  ASSERT_EQ(run_cli({"figure", "fig5", "--out", dir.string(), "--density", "4"}).code, 0);
  const auto lines = data_lines(slurp(dir / "fig5_parallel.csv"));
  ASSERT_EQ(lines.size(), 13u);
  EXPECT_EQ(fields(lines[1])[2], "1.5");
  EXPECT_EQ(fields(lines[5])[2], "1.8");
  EXPECT_EQ(fields(lines[9])[2], "2");
  EXPECT_EQ(records(slurp(dir / "fig5_manifest.txt")).at("curves.nu"), "1.5,1.8,2");
}

TEST(MaximizeCommand, RadialRecord) {
  const auto r = run_cli({"maximize", "--pol", "radial", "--nu", "1.5", "--tau", "4", "--theta",
                          "0", "--axis", "r:0.01:10"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rec = records(r.out);
  EXPECT_NEAR(std::stod(rec.at("r_tilde")), 0.14, 0.014);
  EXPECT_NEAR(std::stod(rec.at("fisher")), 8.513, 0.02 * 8.513);
  EXPECT_EQ(rec.at("converged"), "true");
  EXPECT_EQ(rec.at("pol"), "radial");
  EXPECT_NEAR(std::stod(rec.at("crlb_single")) * std::stod(rec.at("fisher")), 1.0, 1e-12);
}

TEST(MaximizeCommand, Errors) {
  EXPECT_EQ(run_cli({"maximize", "--pol", "radial", "--nu", "1.5", "--tau", "4", "--theta", "0",
                     "--axis", "r:1:1"})
                .code,
            kExitUsage);
  EXPECT_EQ(run_cli({"maximize", "--pol", "radial", "--nu", "1.5", "--tau", "4", "--theta", "0"})
                .code,
            kExitUsage);
  EXPECT_EQ(run_cli({"maximize", "--pol", "radial", "--nu", "1.5", "--tau", "4", "--theta", "0",
                     "--axis", "r:0.01:10", "--tol", "0"})
                .code,
            kExitUsage);
}

TEST(MaximizeCommand, IterationCapReportsConvergenceFailure) {
  const auto r = run_cli({"maximize", "--pol", "radial", "--nu", "1.5", "--tau", "4", "--theta",
                          "0", "--axis", "r:0.01:10:50", "--tol", "1e-300"});
  EXPECT_EQ(r.code, kExitConvergence);
  const auto rec = records(r.out);
  EXPECT_EQ(rec.at("converged"), "false");
  EXPECT_GT(std::stod(rec.at("fisher")), 8.0);
}

TEST(ConfigFile, SuppliesMissingOptionsAndFlagsWin) {
  const auto dir = scratch("config");
  const auto ini = dir / "run.ini";
  std::ofstream(ini) << "jobs = 1\n[qfi]\npol = tangential\nr = 0.14\nnu = 1.5\ntau = 4\ntheta = 0\n";
  const auto from_file = run_cli({"--config", ini.string(), "qfi"});
  ASSERT_EQ(from_file.code, 0) << from_file.err;
  const auto row = fields(data_lines(from_file.out)[1]);
  EXPECT_EQ(row[0], "tangential");
  EXPECT_EQ(row[1], "0.14");
  EXPECT_NEAR(std::stod(row[5]), 7.796, 0.02 * 7.796);

  const auto override = run_cli({"--config", ini.string(), "qfi", "--r", "0.2"});
  ASSERT_EQ(override.code, 0);
  EXPECT_EQ(fields(data_lines(override.out)[1])[1], "0.2");

  EXPECT_EQ(run_cli({"--config", (dir / "missing.ini").string(), "qfi"}).code, kExitUsage);
}

TEST(Determinism, CacheOnAndOffGiveIdenticalFiles) {
  const auto dir = scratch("determinism");
  const std::vector<std::string> cmd = {"qfi", "--pol", "radial", "--nu", "1.5", "--tau", "4",
                                        "--theta", "0", "--sweep", "r:0.05:3:25:log"};
  auto run_to = [&](const std::string& name, std::vector<std::string> extra) {
    auto a = cmd;
    a.insert(a.end(), extra.begin(), extra.end());
    a.push_back("--output");
    a.push_back((dir / name).string());
    EXPECT_EQ(run_cli(a).code, 0);
    return slurp(dir / name);
  };
  const auto plain = run_to("plain.csv", {});
  const auto again = run_to("again.csv", {"--jobs", "3"});
  const auto cold = run_to("cold.csv", {"--cache", (dir / "cache.txt").string()});
  const auto warm = run_to("warm.csv", {"--cache", (dir / "cache.txt").string()});
  EXPECT_FALSE(plain.empty());
  EXPECT_EQ(plain, again);
  EXPECT_EQ(plain, cold);
  EXPECT_EQ(plain, warm);
  EXPECT_TRUE(fs::exists(dir / "cache.txt"));
}
