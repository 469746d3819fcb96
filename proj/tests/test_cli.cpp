#include "fkmd/config.hpp"
#include "fkmd/io.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace fkmd;
namespace fs = std::filesystem;

namespace {

const std::string kLinear = R"(
[operator]
preset = "divergence"
diffusion_scale = 1.0
[domain]
kind = "interval"
a = 0.0
b = 1.0
[grid]
nodes = 5
[measure]
density = 1.0
mode = "pathwise"
[sim]
dt = 1e-3
paths = 4000
seed = 3
)";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "fkmd_cli_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "run.toml";
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs the CLI; stdout and stderr land in dir/log.txt.
int run(const fs::path& dir, const std::string& args) {
  const std::string cmd = std::string(FKMD_CLI) + " " + args + " > " + (dir / "log.txt").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, ParsesLinearCase) {
  const auto cfg = parse_config(kLinear);
  EXPECT_EQ(cfg.grid.nodes_per_axis(), 5);
  EXPECT_EQ(cfg.sim.paths, 4000u);
  EXPECT_EQ(cfg.picard.measure_mode, MeasureMode::pathwise);
  EXPECT_TRUE(cfg.mu.has_density());
  EXPECT_TRUE(cfg.f.identically_zero);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(parse_config(kLinear + "\n[extra]\nx = 1\n"), ConfigError);
  EXPECT_THROW(parse_config(kLinear + "\n[picard]\ndamping = 1.5\n"), std::exception);
  std::string typo = kLinear;
  typo.replace(typo.find("diffusion_scale"), 15, "diffusion_scal");
  EXPECT_THROW(parse_config(typo), ConfigError);
  EXPECT_THROW(parse_config("[operator\n"), ConfigError);
}

TEST(Config, ShippedPresetsLoad) {
  for (const auto& e : fs::directory_iterator(FKMD_SOURCE_DIR "/configs")) {
    if (e.path().extension() != ".toml") continue;
    EXPECT_NO_THROW(load_config(e.path())) << e.path();
  }
}

TEST(Io, SolutionRoundTrip) {
  const Domain d = Domain::interval(0.0, 1.0);
  const Grid g = Grid::over(d, 7);
  const auto u = SolutionField::from_function(g, d, [](const Vec& x) { return x[0] * (1.0 - x[0]) / 3.0; });
  const fs::path dir = scratch("io");
  io::write_solution(dir / "solution.csv", u, std::vector<double>(g.size(), 1e-3));
  std::vector<double> se;
  const auto back = io::read_solution(dir / "solution.csv", g, d, &se);
  EXPECT_EQ(back.values(), u.values());
  EXPECT_EQ(se[3], 1e-3);
  EXPECT_THROW(io::read_solution(dir / "solution.csv", Grid::over(d, 9), d, &se), Error);
}

TEST(Cli, SolveLinearCase) {
  const fs::path dir = scratch("solve");
  const auto cfg = write_config(dir, kLinear);
  ASSERT_EQ(run(dir, "solve --config " + cfg.string() + " --out " + (dir / "out").string()), 0) << slurp(dir / "log.txt");
  std::vector<double> se;
  const auto u = io::read_solution(dir / "out/solution.csv", Grid::over(Domain::interval(0.0, 1.0), 5), Domain::interval(0.0, 1.0), &se);
  EXPECT_NEAR(u[2], 0.125, 3.0 * se[2] + 1e-3);
  const auto report = nlohmann::json::parse(slurp(dir / "out/report.json"));
  EXPECT_TRUE(report.contains("iterations"));
}

TEST(Cli, NonMonotoneDriverExitsOne) {
  const fs::path dir = scratch("nonmono");
  const auto cfg = write_config(dir, kLinear + "\n[nonlinearity]\nf = \"y\"\n");
  EXPECT_EQ(run(dir, "solve --config " + cfg.string() + " --out " + dir.string()), 1);
  EXPECT_NE(slurp(dir / "log.txt").find("(A2)"), std::string::npos);
}

TEST(Cli, ShortHorizonExitsTwo) {
  const fs::path dir = scratch("horizon");
  std::string text = kLinear;
  text.replace(text.find("seed = 3"), 8, "seed = 3\nmax_horizon = 0.01");
  const auto cfg = write_config(dir, text);
  EXPECT_EQ(run(dir, "solve --config " + cfg.string() + " --out " + dir.string()), 2);
  EXPECT_NE(slurp(dir / "log.txt").find("censor"), std::string::npos);
}

TEST(Cli, MissingConfigExitsOne) {
  const fs::path dir = scratch("missing");
  EXPECT_EQ(run(dir, "solve --config " + (dir / "nope.toml").string()), 1);
}

TEST(Cli, DiracEnergyCheck) {
  const fs::path dir = scratch("energy");
  ASSERT_EQ(run(dir, "verify --solve --checks energy --config " FKMD_SOURCE_DIR "/configs/dirac.toml --out " + dir.string()), 0)
      << slurp(dir / "log.txt");
  const std::string csv = slurp(dir / "energy.csv");
  EXPECT_NE(csv.find("0.25"), std::string::npos);
}

TEST(Cli, CorruptedSolutionFailsMartingale) {
  const fs::path dir = scratch("corrupt");
  std::string text = kLinear;
  text.replace(text.find("nodes = 5"), 9, "nodes = 101");
  text += "\n[verify]\nx0 = [0.5]\nsolution_expr = \"x*(1-x)/2 + 0.1*max(0, 1 - abs(x - 0.5)/0.25)\"\n";
  const auto cfg = write_config(dir, text);
  EXPECT_EQ(run(dir, "verify --checks martingale --paths 20000 --config " + cfg.string() + " --out " + dir.string()), 3)
      << slurp(dir / "log.txt");
}

TEST(Cli, EmptyChecksIsNoOp) {
  const fs::path dir = scratch("empty");
  const auto cfg = write_config(dir, kLinear);
  EXPECT_EQ(run(dir, "verify --checks \"\" --config " + cfg.string() + " --out " + dir.string()), 0);
  EXPECT_NE(slurp(dir / "log.txt").find("warn"), std::string::npos);
}

TEST(Cli, HorizonConvergenceColumnIncreases) {
  const fs::path dir = scratch("conv");
  std::string text = kLinear;
  text.replace(text.find("nodes = 5"), 9, "nodes = 3");
  const auto cfg = write_config(dir, text + "\n[verify]\nx0 = [0.5]\n");
  ASSERT_EQ(run(dir, "convergence --axis horizon --ladder 0.05,0.1,0.2,0.4,0.8 --config " + cfg.string() + " --out " + dir.string()), 0)
      << slurp(dir / "log.txt");
  std::istringstream csv(slurp(dir / "convergence.csv"));
  std::string line;
  std::getline(csv, line);
  std::vector<double> est;
  while (std::getline(csv, line)) {
    const auto cells = io::split(line);
    est.push_back(std::stod(cells.at(1)));
  }
  ASSERT_EQ(est.size(), 5u);
  for (std::size_t i = 1; i < est.size(); ++i) EXPECT_GT(est[i], est[i - 1]);
  EXPECT_NEAR(est.back(), 0.125, 0.01);
}
