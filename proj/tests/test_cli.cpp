#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rft/io.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(RFTOOL_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) r.out += buf;
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::map<std::string, std::string> report(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (const auto eq = line.find('='); eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  return kv;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

double variance(const rft::ScalarField& f) {
  double m = 0.0, s = 0.0;
  for (double v : f.values()) m += v;
  m /= static_cast<double>(f.size());
  for (double v : f.values()) s += (v - m) * (v - m);
  return s / static_cast<double>(f.size() - 1);
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("rftool_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) rows.push_back(rft::io::split(line, ','));
  return rows;
}

}  // namespace

TEST_CASE("simulate writes raw white noise") {
  TempDir dir;
  REQUIRE(run("simulate --dims 101,101 --fwhm 0 --sigma-w 0.4 --seed 7 --out " + dir.file("w.rfgrid")).code == 0);
  const auto f = rft::io::load_rfgrid(dir.file("w.rfgrid"));
  CHECK(f.grid().dims() == std::vector<std::size_t>{101, 101});
  CHECK(std::abs(std::sqrt(variance(f)) - 0.4) < 0.04);
}

TEST_CASE("simulate is deterministic and iterated smoothing reduces variance") {
  TempDir dir;
  const std::string base = "simulate --dims 101,101 --fwhm 4 --sigma-w 0.4 --seed 7 --signal coskey";
  REQUIRE(run(base + " --iterations 1 --out " + dir.file("a.rfgrid")).code == 0);
  REQUIRE(run(base + " --iterations 1 --out " + dir.file("b.rfgrid")).code == 0);
  CHECK(slurp(dir.file("a.rfgrid")) == slurp(dir.file("b.rfgrid")));

  const std::string noise = "simulate --dims 101,101 --fwhm 4 --sigma-w 0.4 --seed 7";
  REQUIRE(run(noise + " --iterations 1 --out " + dir.file("i1.rfgrid")).code == 0);
  REQUIRE(run(noise + " --iterations 4 --out " + dir.file("i4.rfgrid")).code == 0);
  REQUIRE(run(noise + " --iterations 9 --out " + dir.file("i9.rfgrid")).code == 0);
  const double v1 = variance(rft::io::load_rfgrid(dir.file("i1.rfgrid")));
  const double v4 = variance(rft::io::load_rfgrid(dir.file("i4.rfgrid")));
  const double v9 = variance(rft::io::load_rfgrid(dir.file("i9.rfgrid")));
  CHECK(v9 < v4);
  CHECK(v4 < v1);
}

TEST_CASE("simulate reports bad flags and unwritable paths") {
  CHECK(run("simulate --dims 10,10 --out /nonexistent/dir/x.rfgrid").code != 0);
  CHECK(run("simulate --dims 10,10").code == 64);
  CHECK(run("simulate --dims 10,x --out /tmp/never.rfgrid").code == 64);
  CHECK(run("simulate --dims 10,10 --sigma-w -1 --out /tmp/never.rfgrid").code == 64);
  CHECK(run("simulate --dims 10,10 --signal banana --out /tmp/never.rfgrid").code == 64);
  CHECK(run("").code == 64);
}

TEST_CASE("threshold subcommand") {
  SECTION("expected EC on a full 100x100 lattice") {
    const Run r = run("threshold --box 100,100 --fwhm 10 --alpha 0.05 --method ec");
    REQUIRE(r.code == 0);
    const auto kv = report(r.out);
    CHECK(kv.at("method") == "ec");
    CHECK(std::abs(std::stod(kv.at("h")) - 3.81) <= 0.05);
    CHECK(std::abs(std::stod(kv.at("alpha_achieved")) - 0.05) < 1e-8);
    CHECK(kv.at("mu0") == "1");
    CHECK(kv.at("mu1") == "200");
    CHECK(kv.at("mu2") == "10000");
    CHECK(std::abs(std::stod(kv.at("lambda")) - 0.0277259) < 1e-7);
  }
  SECTION("mask input gives the same answer as the box") {
    TempDir dir;
    {
      std::ofstream m(dir.file("mask.rfgrid"));
      rft::io::write_rfgrid(m, rft::ScalarField(rft::Grid({100, 100}), 1.0));
    }
    const auto a = report(run("threshold --mask " + dir.file("mask.rfgrid") + " --fwhm 10").out);
    const auto b = report(run("threshold --box 100,100 --fwhm 10").out);
    CHECK(a.at("h") == b.at("h"));
  }
  SECTION("Bonferroni") {
    const Run r = run("threshold --method bonferroni --n-tests 10000 --alpha 0.05");
    REQUIRE(r.code == 0);
    CHECK(std::abs(std::stod(report(r.out).at("h")) - 4.4172) <= 5e-4);
  }
  SECTION("F field in a ball and clumping") {
    CHECK(run("threshold --ball 20 --lambda 0.05 --alpha 0.05").code == 0);
    CHECK(run("threshold --box 50,50 --family f --df 5,30 --fwhm 8").code == 0);
    const Run c = run("threshold --box 100,100 --method clump --mean-clump 20 --alpha 0.05");
    REQUIRE(c.code == 0);
    CHECK(report(c.out).at("method") == "clump");
  }
  SECTION("errors map to exit codes") {
    CHECK(run("threshold --method bonferroni --n-tests 10 --alpha 0").code == 64);
    CHECK(run("threshold --box 100,100 --fwhm 10 --alpha 0").code == 64);
    CHECK(run("threshold --box 1,1 --lambda 0.001 --alpha 0.5").code == 2);
    CHECK(run("threshold --box 100,100").code == 64);
    CHECK(run("threshold --box 100,100 --ball 3 --fwhm 10").code == 64);
    CHECK(run("threshold --ball 10 --family f --df 5,30 --fwhm 5").code == 64);
    CHECK(run("threshold --box 10,10 --fwhm 5 --method magic").code == 64);
    CHECK(run("threshold --mask /nonexistent.rfgrid --fwhm 5").code == 1);
  }
}

TEST_CASE("ec-curve subcommand") {
  TempDir dir;
  SECTION("key-with-hole experiment config gives 21 rows") {
    std::ofstream(dir.file("key.cfg")) << "dims = 60,37\nfwhm = 10\nsigma_w = 1\nreplicates = 50\n"
                                          "thresholds = -1:0.1:1\nsignal = key\nseed = 1\n";
    REQUIRE(run("ec-curve --config " + dir.file("key.cfg") + " --out " + dir.file("key.csv")).code == 0);
    const auto rows = csv_rows(slurp(dir.file("key.csv")));
    REQUIRE(rows.size() == 22);
    CHECK(rows[0] == std::vector<std::string>{"h", "mean_ec", "expected_ec", "stderr_ec"});
    CHECK(std::stod(rows[1][0]) == -1.0);
    CHECK(std::abs(std::stod(rows[21][0]) - 1.0) < 1e-9);
  }
  SECTION("thresholds above every value give zero mean EC") {
    std::ofstream(dir.file("hi.cfg")) << "dims = 30,30\nfwhm = 4\nreplicates = 10\nthresholds = 50,60\n";
    REQUIRE(run("ec-curve --config " + dir.file("hi.cfg") + " --out " + dir.file("hi.csv")).code == 0);
    const auto rows = csv_rows(slurp(dir.file("hi.csv")));
    REQUIRE(rows.size() == 3);
    CHECK(std::stod(rows[1][1]) == 0.0);
    CHECK(std::stod(rows[2][1]) == 0.0);
  }
  SECTION("null config expected column sits inside the stderr bands") {
    std::ofstream(dir.file("null.cfg")) << "dims = 100,100\nfwhm = 10\nreplicates = 300\nthresholds = 2,2.5,3,3.5\n"
                                           "standardize = theoretical\ninterior_crop = true\nseed = 8\nthreads = 2\n";
    REQUIRE(run("ec-curve --config " + dir.file("null.cfg") + " --out " + dir.file("null.csv")).code == 0);
    const auto rows = csv_rows(slurp(dir.file("null.csv")));
    REQUIRE(rows.size() == 5);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const double mean = std::stod(rows[i][1]), expected = std::stod(rows[i][2]), se = std::stod(rows[i][3]);
      INFO("h=" << rows[i][0] << " mean=" << mean << " expected=" << expected << " se=" << se);
      CHECK(std::abs(mean - expected) <= 3.0 * se);
    }
  }
  SECTION("malformed configs fail") {
    std::ofstream(dir.file("bad.cfg")) << "dims = 10,10\nthresholds = 1\nbogus = 3\n";
    CHECK(run("ec-curve --config " + dir.file("bad.cfg") + " --out " + dir.file("bad.csv")).code != 0);
    std::ofstream(dir.file("bad2.cfg")) << "dims: 10,10\n";
    CHECK(run("ec-curve --config " + dir.file("bad2.cfg") + " --out " + dir.file("bad.csv")).code != 0);
    CHECK(run("ec-curve --config /nonexistent.cfg --out " + dir.file("bad.csv")).code != 0);
  }
}

TEST_CASE("validate subcommand") {
  const auto start = std::chrono::steady_clock::now();
  const Run a = run("validate --suite quick --seed 12345 --threads 1");
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(seconds <= 60.0);
  CHECK(a.out.find("PASS [01]") != std::string::npos);
  CHECK(a.out.find("criteria passed") != std::string::npos);

  const Run b = run("validate --suite quick --seed 12345 --threads 1");
  const Run c = run("validate --suite quick --seed 12345 --threads 4");
  CHECK(a.out == b.out);
  CHECK(a.out == c.out);
  CHECK(a.code == b.code);
  CHECK((a.code == 0 || a.code == 1));
  CHECK(run("validate --suite medium").code == 64);
}

TEST_CASE("validate negative control: corrupted lambda fails the mean-EC criterion") {
  const Run r = run("validate --suite full --inject-lambda-scale 2");
  CHECK(r.code == 1);
  CHECK(r.out.find("FAIL [05]") != std::string::npos);
}
