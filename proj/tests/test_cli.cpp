#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "sepsplit/cli.hpp"
#include "sepsplit/errors.hpp"
#include "sepsplit/report.hpp"

using namespace sepsplit;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream o, e;
  int c = run_cli(args, o, e);
  return {c, o.str(), e.str()};
}

// Bare model names resolve under $SEPSPLIT_MODELS; default it so the binary runs outside ctest.
const bool models_env = [] { return ::setenv("SEPSPLIT_MODELS", SEPSPLIT_SOURCE_DIR "/models", 0) == 0; }();

fs::path temp_dir() {
  fs::path p = fs::temp_directory_path() / ("sepsplit_cli_" + std::to_string(::getpid()));
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("eps grid specs") {
  auto g = parse_eps_grid("0.08:0.3:6");
  REQUIRE(g.size() == 6);
  CHECK(g.front() == doctest::Approx(0.3));
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] < g[i - 1]);
  auto l = parse_eps_grid("0.1:0.3:3:lin");
  CHECK(l[1] == doctest::Approx(0.2));
  CHECK_THROWS_AS(parse_eps_grid("0.1:0.3"), ValidationError);
  CHECK_THROWS_AS(parse_eps_grid("0.1:0.3:0"), ValidationError);
  CHECK_THROWS_AS(parse_eps_grid("0.1:0.3:4:log"), ValidationError);
}

TEST_CASE("analyze reports the Duffing singular regime") {
  auto r = run({"analyze", "--model", "duffing_x4"});
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["regime"]["regime"] == "SingularEllEquals2r");
  CHECK(j["regime"]["ell"] == "4");
  CHECK(j["separatrix"]["r"] == "2");
  CHECK(j["separatrix"]["a"].get<double>() == doctest::Approx(M_PI / 2).epsilon(1e-14));

  auto l = run({"analyze", "--model", "duffing_lambda"});
  REQUIRE(l.code == 0);
  auto jl = nlohmann::json::parse(l.out);
  // λ = 1 in the model file: b = −4√2 i
  CHECK(jl["constants"]["b"][1].get<double>() == doctest::Approx(-4 * std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("predict with mu = 0 gives a zero area column") {
  fs::path dir = temp_dir();
  {
    std::ofstream f(dir / "zero.json");
    f << R"({"name": "inline", "potential": {"kind": "polynomial", "coefficients": {"2": -0.5, "4": 0.25}},
      "perturbation": {"kind": "polynomial", "terms": [{"x_power": 1, "y_power": 0, "fourier": {"sin": {"1": 1}}}]},
      "eta": 2, "mu": 0})";
  }
  auto r = run({"predict", "--model", (dir / "zero.json").string(), "--eps-grid", "0.1:0.3:4"});
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  CHECK(line == "eps,area_pred,formula_id,caveats");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
    CHECK(std::stod(line.substr(c1 + 1, c2 - c1 - 1)) == 0.0);
  }
  CHECK(rows == 4);
}

TEST_CASE("melnikov subcommand emits JSON") {
  auto r = run({"melnikov", "--model", "duffing_x1", "--eps", "0.5", "--k", "1"});
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["k"] == 1);
  double exact = -(std::sqrt(2.0) * M_PI / 2) / std::cosh(M_PI);
  CHECK(j["value"][1].get<double>() == doctest::Approx(exact).epsilon(1e-12));
  CHECK(j.contains("est_error"));
}

TEST_CASE("exit codes") {
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"analyze", "--model", "no_such_model"}).code == 2);
  auto r = run({"melnikov", "--model", "duffing_x1", "--eps", "0.005", "--bits", "64"});
  CHECK(r.code == 3);
  CHECK(r.err.find("precision") != std::string::npos);
}

TEST_CASE("sweep is resumable and fit reads the CSV") {
  fs::path dir = temp_dir();
  fs::path csv = dir / "sweep.csv";
  fs::remove(csv);
  {
    std::ofstream f(dir / "flat.json");
    f << R"({"name": "inline", "potential": {"kind": "polynomial", "coefficients": {"2": -0.5, "4": 0.25}},
      "perturbation": {"kind": "polynomial", "terms": []}, "eta": 0, "mu": 0})";
  }
  auto a = run({"sweep", "--model", (dir / "flat.json").string(), "--eps-grid", "0.2:0.3:2", "--out", csv.string()});
  REQUIRE(a.code == 0);
  CHECK(a.err.find("2 computed, 0 reused") != std::string::npos);
  auto b = run({"sweep", "--model", (dir / "flat.json").string(), "--eps-grid", "0.15:0.3:3", "--out", csv.string()});
  REQUIRE(b.code == 0);
  CHECK(b.err.find("reused") != std::string::npos);
  auto rows = read_sweep_csv(csv.string());
  CHECK(rows.size() == 4);  // 0.3, 0.2 and then 0.3·(0.5)^{1/2}, 0.15

  // Synthetic sweep for the fit
  fs::path fcsv = dir / "fit.csv";
  {
    std::ofstream f(fcsv);
    write_sweep_header(f);
    for (double e : {0.3, 0.25, 0.2, 0.16, 0.12, 0.1}) {
      SweepRow row;
      row.eps = e;
      row.area = exp(BigReal(std::log(3.0) + 2 * std::log(e) - M_PI / (2 * e)));
      row.est_error = BigReal(0.0);
      row.bits = 128;
      write_sweep_row(f, row);
    }
  }
  auto fr = run({"fit", "--in", fcsv.string()});
  REQUIRE(fr.code == 0);
  auto j = nlohmann::json::parse(fr.out);
  CHECK(j["a"].get<double>() == doctest::Approx(M_PI / 2).epsilon(1e-6));
  CHECK(j["beta"].get<double>() == doctest::Approx(2.0).epsilon(1e-6));

  auto rep = run({"report", "--model", "duffing_x1", "--in", fcsv.string(), "--out", (dir / "plot.svg").string()});
  REQUIRE(rep.code == 0);
  std::ifstream svg(dir / "plot.svg");
  std::string body((std::istreambuf_iterator<char>(svg)), std::istreambuf_iterator<char>());
  CHECK(body.rfind("<svg", 0) == 0);
  CHECK(body.find("prediction") != std::string::npos);
  CHECK(body.find("measured") != std::string::npos);
  CHECK(body.find("fit:") != std::string::npos);
  fs::remove_all(dir);
}
