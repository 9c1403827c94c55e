#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "disagg/io.hpp"
#include "support/corpus.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

fs::path scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("disagg_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run run(const std::string& args) {
  const fs::path out = scratch() / "stdout.txt";
  const fs::path err = scratch() / "stderr.txt";
  const std::string cmd = std::string("\"") + DISAGG_BINARY + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                          err.string() + "\"";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

fs::path write_graph(const std::string& name, const disagg::WeightedGraph<double>& g) {
  const fs::path p = scratch() / name;
  std::ofstream f(p);
  disagg::io::write_edge_list(f, g);
  return p;
}

}  // namespace

TEST_CASE("usage errors exit with code 2") {
  CHECK(run("").code == 2);
  const auto r = run("frobnicate x");
  CHECK(r.code == 2);
  CHECK(r.err.find("Usage") != std::string::npos);
  CHECK(run("verify /nonexistent/graph.edges").code == 2);
  CHECK(run("--help").code == 0);
}

TEST_CASE("verify on an empty plan passes") {
  const auto g = write_graph("k4.edges", corpus::complete(4));
  const auto r = run("verify " + g.string());
  CHECK(r.code == 0);
  const auto doc = nlohmann::json::parse(r.out);
  CHECK(doc["all_hold"] == true);
  CHECK(doc["input"]["vertices"] == 4);
  CHECK(doc["input"]["hash"].get<std::string>().size() == 16);
  for (const auto& c : doc["checks"]) CHECK(c["holds"] == true);
}

TEST_CASE("verify with a threshold plan and JSON output file") {
  const auto g = write_graph("star.edges", corpus::star(7));
  const fs::path out = scratch() / "report.json";
  const auto r = run("verify " + g.string() + " --threshold 3 --d-rule fixed:3 --template clique --eps 0.5 --out " +
                     out.string());
  CHECK(r.code == 0);
  const auto doc = nlohmann::json::parse(slurp(out));
  CHECK(doc["plan"]["splits"].size() == 1);
  CHECK(doc["plan"]["splits"][0]["d"] == 3);
  CHECK(doc["parameters"]["eps"] == 0.5);
}

TEST_CASE("disaggregate writes G_D, P and the plan") {
  const auto g = write_graph("tri.edges", corpus::complete(3));
  const fs::path plan = scratch() / "plan.in.json";
  std::ofstream(plan) << R"({"splits":[{"vertex":2,"d":2,"assignment":[[0,0],[1,1]],"internal_weights":[1.0]}]})";
  const fs::path dir = scratch() / "dis";
  const auto r = run("disaggregate " + g.string() + " --plan " + plan.string() + " --out " + dir.string());
  REQUIRE(r.code == 0);
  std::ifstream gd(dir / "gd.edges");
  const auto back = disagg::io::read_edge_list(gd);
  CHECK(back.size() == 4);
  CHECK(back.edge_count() == 4);
  CHECK(slurp(dir / "prolongation.txt").rfind("4 3 4\n", 0) == 0);
  const auto resolved = disagg::io::plan_from_json(nlohmann::json::parse(slurp(dir / "plan.json")));
  CHECK(resolved.splits[0].assignment.size() == 2);
}

TEST_CASE("spectrum output") {
  const auto g = write_graph("k5.edges", corpus::complete(5));
  const auto r = run("spectrum " + g.string() + " --k 3");
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(r.out);
  CHECK(doc["laplacian"]["eigenvalues"].size() == 3);
  CHECK(doc["laplacian"]["algebraic_connectivity"].get<double>() == doctest::Approx(5.0));
  CHECK(doc["nu2"].get<double>() == doctest::Approx(1.25));
  CHECK(doc.contains("cheeger"));
}

TEST_CASE("matrix market input") {
  const fs::path p = scratch() / "tri.mtx";
  std::ofstream(p) << "%%MatrixMarket matrix coordinate real symmetric\n3 3 3\n2 1 1\n3 1 1\n3 2 1\n";
  CHECK(run("spectrum " + p.string()).code == 0);
  const fs::path bad = scratch() / "bad.mtx";
  std::ofstream(bad) << "%%MatrixMarket matrix coordinate real symmetric\n3 3 1\n2 1 -1\n3 1 1\n";
  const auto r = run("spectrum " + bad.string());
  CHECK(r.code == 2);
  CHECK(r.err.find("line") != std::string::npos);
}

TEST_CASE("precondition runs PCG") {
  const auto r = run("precondition powerlaw:40:2.5 --seed 3 --threshold 8 --eps 0.1 --tol 1e-10");
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(r.out);
  CHECK(doc["solve"]["converged"] == true);
  CHECK(doc["solve"]["kappa_ba"].get<double>() <= 1.1 + 1e-6);
  CHECK(doc["solve"]["final_relative_residual"].get<double>() <= 1e-9);
  const auto j = run("precondition powerlaw:40:2.5 --seed 3 --threshold 8 --inner jacobi --maxit 2");
  CHECK(j.code == 1);
  CHECK(run("precondition powerlaw:40:2.5 --inner amg").code == 2);
}

TEST_CASE("probe-conjecture on the star") {
  const auto g = write_graph("k15.edges", corpus::star(5));
  const auto r = run("probe-conjecture " + g.string());
  REQUIRE(r.code == 0);
  std::istringstream csv(r.out);
  std::string line;
  std::getline(csv, line);
  CHECK(line == "w,a_GD,bound,a_G");
  int rows = 0;
  while (std::getline(csv, line)) {
    double w = 0, agd = 0, bound = 0, ag = 0;
    char c = 0;
    std::istringstream row(line);
    row >> w >> c >> agd >> c >> bound >> c >> ag;
    CHECK(agd <= bound + 1e-9);
    ++rows;
  }
  CHECK(rows == 7);
  CHECK(run("probe-conjecture " + g.string() + " --weights 1,2,3").out.find("\n3,") != std::string::npos);
}

TEST_CASE("outputs are deterministic") {
  const auto a = run("spectrum powerlaw:30:2.5 --seed 11");
  const auto b = run("spectrum powerlaw:30:2.5 --seed 11");
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
}
