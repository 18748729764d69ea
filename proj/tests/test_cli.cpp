// Copyright 2026 The ile Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Black-box tests: run the built executable and inspect exit codes and output.

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "json.hpp"

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using Complex = std::complex<double>;

const std::string kCli = ILE_CLI_PATH;
const std::string kSamples = ILE_SAMPLES_DIR;

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = "'" + kCli + "' " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  for (std::size_t n; (n = fread(buf, 1, sizeof(buf), pipe)) > 0;) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("ile_cli_" + std::string(info->name()) + "_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) const {
    const auto p = dir_ / name;
    std::ofstream(p) << text;
    return "'" + p.string() + "'";
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

std::string sample(const std::string& name) { return "'" + kSamples + "/" + name + "'"; }

Complex cx(const json& j) { return {j[0].get<double>(), j[1].get<double>()}; }

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  for (std::size_t k = 0; k < text.size(); ++k) {
    const char ch = text[k];
    if (quoted) {
      if (ch == '"' && k + 1 < text.size() && text[k + 1] == '"') {
        field += '"';
        ++k;
      } else if (ch == '"') {
        quoted = false;
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      row.push_back(field);
      field.clear();
    } else if (ch == '\r' && k + 1 < text.size() && text[k + 1] == '\n') {
      row.push_back(field);
      field.clear();
      rows.push_back(row);
      row.clear();
      ++k;
    } else {
      field += ch;
    }
  }
  EXPECT_TRUE(row.empty() && field.empty()) << "CSV must end with CRLF";
  return rows;
}

std::size_t column(const std::vector<std::string>& head, const std::string& name) {
  for (std::size_t k = 0; k < head.size(); ++k) {
    if (head[k] == name) return k;
  }
  ADD_FAILURE() << "missing column " << name;
  return 0;
}

TEST_F(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run("--help").code, 0);
  EXPECT_EQ(run("plan --help").code, 0);
  EXPECT_EQ(run("--version").code, 0);
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("plan").code, 2);
  EXPECT_EQ(run("modes --n 3 --format xml").code, 2);
}

TEST_F(Cli, PlanEvenCat) {
  const auto r = run("plan --input " + write("t.json", R"({"coeffs": [[1,0],[0,0],[1,0]]})"));
  ASSERT_EQ(r.code, 0);
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["header"]["version"], "0.1.0");
  EXPECT_EQ(j["header"]["command"], "plan");
  const auto& w = j["best"]["weights"];
  ASSERT_EQ(w.size(), 2U);
  EXPECT_NEAR(std::abs(cx(w[0]) - Complex(0.0, -1.0)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(cx(w[1]) - Complex(0.0, 1.0)), 0.0, 1e-12);
  EXPECT_NEAR(j["best"]["p_nominal"].get<double>(), 1.0 / 64.0, 1e-15);
  EXPECT_FALSE(j.contains("branches"));
  const auto all = json::parse(run("plan --all --input '" + path("t.json") + "'").out);
  EXPECT_GE(all["branches"].size(), 2U);
}

TEST_F(Cli, PlanBinomialRow) {
  const auto r = run("plan -i " + write("t.json", R"({"coeffs": [[1,0],[2,0],[1,0]]})"));
  ASSERT_EQ(r.code, 0);
  const auto j = json::parse(r.out);
  for (const auto& w : j["best"]["weights"]) EXPECT_NEAR(std::abs(cx(w)), 0.0, 1e-12);
  EXPECT_NEAR(j["best"]["p_nominal"].get<double>(), 1.0 / 16.0, 1e-15);
}

TEST_F(Cli, MalformedJsonExitsTwoWithoutOutput) {
  const auto in = write("bad.json", R"({"coeffs": [[1,0],)");
  EXPECT_EQ(run("plan -i " + in + " -o '" + path("out.json") + "'").code, 2);
  EXPECT_FALSE(fs::exists(path("out.json")));
  EXPECT_EQ(run("simulate -i " + in + " -o '" + path("out.json") + "'").code, 2);
  EXPECT_FALSE(fs::exists(path("out.json")));
  EXPECT_EQ(run("plan -i '" + path("missing.json") + "' -o '" + path("out.json") + "'").code, 2);
  EXPECT_FALSE(fs::exists(path("out.json")));
}

TEST_F(Cli, SolverFailureExitsThreeWithoutOutput) {
  // (1, -1) needs a weight at infinity on every branch.
  const auto in = write("t.json", R"({"coeffs": [[1,0],[-1,0]]})");
  EXPECT_EQ(run("plan -i " + in + " -o '" + path("out.json") + "'").code, 3);
  EXPECT_FALSE(fs::exists(path("out.json")));
}

TEST_F(Cli, OverridesAreCheckedAndEchoed) {
  EXPECT_EQ(run("simulate -i " + sample("even_cat_plan.json") + " --set mass=3").code, 2);
  EXPECT_EQ(run("simulate -i " + sample("even_cat_plan.json") + " --set eta").code, 2);
  EXPECT_EQ(run("simulate -i " + sample("even_cat_plan.json") + " --set eta=abc").code, 2);
  const auto r = run("simulate -i " + sample("even_cat_plan.json") + " --set eta=0.05 --set t=500");
  ASSERT_EQ(r.code, 0);
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["header"]["plan"]["eta"].get<double>(), 0.05);
  for (const auto& c : j["header"]["plan"]["cycles"]) EXPECT_EQ(c["t"].get<double>(), 500.0);
}

TEST_F(Cli, SimulateSingleIonZeroWeight) {
  const auto r = run("simulate -i " +
                     write("p.json", R"({"eta":0.1,"omega":0.01,"delta":1.0,"n_ions":1,"alpha":[0,0],
                                         "cycles":[{"t":100,"p":[[0,0]]}]})"));
  ASSERT_EQ(r.code, 0);
  const auto j = json::parse(r.out);
  const auto& c = j["result"]["coeffs"];
  ASSERT_EQ(c.size(), 2U);
  EXPECT_NEAR(std::abs(cx(c[0]) - cx(c[1])), 0.0, 1e-15);
  EXPECT_GT(std::abs(cx(c[0])), 0.0);
  EXPECT_DOUBLE_EQ(j["result"]["p_nominal"].get<double>(), 0.25);
}

TEST_F(Cli, SimulateRejectsUnequalDurations) {
  const auto in = write("p.json", R"({"eta":0.1,"omega":0.01,"delta":1.0,"n_ions":1,
                                      "cycles":[{"t":100,"p":[[0,0]]},{"t":50,"p":[[0,0]]}]})");
  EXPECT_EQ(run("simulate -i " + in + " -o '" + path("out.json") + "'").code, 2);
  EXPECT_FALSE(fs::exists(path("out.json")));
}

TEST_F(Cli, PlanThenSimulateRoundTrip) {
  const auto planned = run("plan -i " + sample("even_cat_target.json"));
  ASSERT_EQ(planned.code, 0);
  const auto plan_file = write("plan.json", json::parse(planned.out)["plan"].dump());
  const auto r = run("simulate -i " + plan_file);
  ASSERT_EQ(r.code, 0);
  const auto doc = json::parse(r.out);
  const auto& c = doc["result"]["coeffs"];
  ASSERT_EQ(c.size(), 3U);
  const std::vector<Complex> got{cx(c[0]), cx(c[1]), cx(c[2])};
  const std::vector<Complex> want{1.0, 0.0, 1.0};
  // Projective comparison: remove the best complex scale, then relative error.
  Complex num{0.0, 0.0};
  double den = 0.0;
  double gn = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    num += std::conj(want[k]) * got[k];
    den += std::norm(want[k]);
    gn += std::norm(got[k]);
  }
  const Complex scale = num / den;
  double err = 0.0;
  for (std::size_t k = 0; k < 3; ++k) err += std::norm(got[k] - scale * want[k]);
  EXPECT_LE(std::sqrt(err / gn), 1e-9);
}

TEST_F(Cli, FockDumpNormMatchesGram) {
  const auto r = run("simulate -i " + sample("even_cat_plan.json") + " --fock 64");
  ASSERT_EQ(r.code, 0);
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["fock"]["amplitudes"].size(), 65U);
  double sum = 0.0;
  for (const auto& a : j["fock"]["amplitudes"]) sum += std::norm(cx(a));
  const double gram = j["result"]["gram_norm_squared"].get<double>();
  EXPECT_NEAR(sum, gram, 1e-8);
  EXPECT_NEAR(j["fock"]["norm_squared"].get<double>(), gram, 1e-8);
}

TEST_F(Cli, ModesJsonAndCsv) {
  const auto two = json::parse(run("modes --n 2").out);
  EXPECT_EQ(two["header"]["n_ions"], 2);
  EXPECT_NEAR(two["mu"][0].get<double>(), 1.0, 1e-12);
  EXPECT_NEAR(two["mu"][1].get<double>(), 1.7320508075688772, 1e-12);
  const auto three = json::parse(run("modes --n 3").out);
  EXPECT_NEAR(three["mu"][1].get<double>(), 1.7320508, 1e-7);
  EXPECT_NEAR(three["mu"][2].get<double>(), 2.4083189, 1e-7);
  EXPECT_EQ(three["b"].size(), 3U);
  EXPECT_EQ(three["positions"].size(), 3U);

  const auto csv = parse_csv(run("modes --n 3 --format csv").out);
  ASSERT_EQ(csv.size(), 4U);
  EXPECT_EQ(csv[0][0], "version");
  EXPECT_NEAR(std::stod(csv[3][column(csv[0], "mu")]), 2.4083189, 1e-7);
  EXPECT_EQ(run("modes --n 0").code, 2);
  EXPECT_EQ(run("modes --n 65").code, 2);
}

TEST_F(Cli, FitOnGridCoherentState) {
  // |alpha> with alpha = 0.6 is the k = 1 component of an n = 2 line through alpha.
  const double a = 0.6;
  json amps = json::array();
  double term = std::exp(-0.5 * a * a);
  for (int k = 0; k <= 40; ++k) {
    amps.push_back(json::array({term, 0.0}));
    term *= a / std::sqrt(k + 1.0);
  }
  const auto r = run("fit -i " + write("f.json", json{{"amplitudes", amps}}.dump()) +
                     " --n 2 --alpha 0.6,0 --beta 0,0.3");
  ASSERT_EQ(r.code, 0);
  const auto j = json::parse(r.out);
  EXPECT_NEAR(j["fidelity"].get<double>(), 1.0, 1e-10);
  EXPECT_EQ(j["header"]["n"], 2);
  EXPECT_EQ(run("fit -i " + path("f.json") + " --n 2 --beta 0,0").code, 2);
  EXPECT_EQ(run("fit -i " + path("f.json") + " --n 2 --beta x").code, 2);
}

TEST_F(Cli, LeakageSweepShapeAndOrder) {
  const auto r = run("leakage -i " + sample("leakage_n2.json") + " --sweep delta=0.95:0.999:2");
  ASSERT_EQ(r.code, 0);
  const auto rows = parse_csv(r.out);
  ASSERT_EQ(rows.size(), 3U);
  const auto& head = rows[0];
  const std::vector<std::string> expected{"version", "variant", "eta", "omega", "n_ions", "delta", "t",
                                          "alpha_re", "alpha_im", "weights", "mean_phonon_1", "mean_phonon_2",
                                          "com_fidelity", "com_purity", "factorization_gap", "p_exact", "status"};
  EXPECT_EQ(head, expected);
  EXPECT_EQ(rows[1][column(head, "delta")], "0.95");
  EXPECT_EQ(rows[2][column(head, "delta")], "0.999");
  for (std::size_t k = 1; k < 3; ++k) {
    EXPECT_EQ(rows[k].size(), head.size());
    EXPECT_EQ(rows[k][column(head, "status")], "ok");
    EXPECT_EQ(rows[k][column(head, "variant")], "integrated");
    EXPECT_EQ(json::parse(rows[k][column(head, "weights")]).size(), 2U);
  }
  EXPECT_EQ(run("leakage -i " + sample("leakage_n2.json") + " --sweep delta=0.95:0.999:1").code, 2);
  EXPECT_EQ(run("leakage -i " + sample("leakage_n2.json") + " --sweep eta=0.01:0.02:3").code, 2);
  EXPECT_EQ(run("leakage -i " + sample("leakage_n2.json") + " --sweep delta=0.95:0.999").code, 2);
}

TEST_F(Cli, LeakageBothVariantsAgainstOracle) {
  const auto r = run("leakage -i " + sample("leakage_n2.json") + " --integrated --paper-beta --sweep t=50:100:3");
  ASSERT_EQ(r.code, 0);
  const auto rows = parse_csv(r.out);
  ASSERT_EQ(rows.size(), 7U);
  const auto& head = rows[0];
  const auto fid = column(head, "com_fidelity");
  for (std::size_t k = 1; k < rows.size(); ++k) {
    EXPECT_EQ(rows[k][column(head, "variant")], k % 2 ? "integrated" : "printed");
    EXPECT_FALSE(rows[k][fid].empty());
  }
  // Last integrated row: t = 100, (1 - delta) t = 1. Values from the brute-force Fock oracle.
  const auto& row = rows[5];
  EXPECT_EQ(row[column(head, "t")], "100");
  EXPECT_NEAR(std::stod(row[fid]), 0.9999999999944879, 1e-12);
  EXPECT_NEAR(std::stod(row[column(head, "p_exact")]), 0.7332456607086041, 1e-12);
  EXPECT_NEAR(std::stod(row[column(head, "mean_phonon_1")]), 1.9645805428741757e-4, 1e-12);
  EXPECT_NEAR(std::stod(row[column(head, "mean_phonon_2")]), 2.8156806617861992e-08, 1e-13);
}

TEST_F(Cli, LeakageSpectatorFreeGap) {
  const auto in = write("p.json", R"({"eta":0.05,"omega":0.005,"delta":0.99,"n_ions":1,"alpha":[0.2,0.1],
                                      "cycles":[{"t":100,"p":[[0.3,0]]},{"t":100,"p":[[0,-0.5]]}]})");
  const auto r = run("leakage -i " + in + " --integrated --paper-beta --sweep delta=0.95:0.999:4");
  ASSERT_EQ(r.code, 0);
  const auto rows = parse_csv(r.out);
  ASSERT_EQ(rows.size(), 9U);
  const auto gap = column(rows[0], "factorization_gap");
  for (std::size_t k = 1; k < rows.size(); ++k) EXPECT_LE(std::stod(rows[k][gap]), 1e-12);
}

TEST_F(Cli, LeakageJsonWithoutSweep) {
  const auto r = run("leakage -i " + sample("leakage_n2.json"));
  ASSERT_EQ(r.code, 0);
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["header"]["plan"]["n_ions"], 2);
  ASSERT_EQ(j["reports"].size(), 1U);
  EXPECT_EQ(j["reports"][0]["variant"], "integrated");
  EXPECT_NEAR(j["reports"][0]["com_fidelity"].get<double>(), 0.9999999999944879, 1e-12);
}

TEST_F(Cli, TermCapMarksRowsIncomplete) {
  const std::string env = "ILE_MAX_TERMS=3 '" + kCli + "' ";
  const auto sweep = "leakage -i " + sample("leakage_n2.json") + " --sweep t=50:100:2";
  FILE* pipe = popen((env + sweep + " 2>/dev/null").c_str(), "r");
  ASSERT_NE(pipe, nullptr);
  std::string out;
  char buf[4096];
  for (std::size_t n; (n = fread(buf, 1, sizeof(buf), pipe)) > 0;) out.append(buf, n);
  const int status = pclose(pipe);
  EXPECT_EQ(WEXITSTATUS(status), 0);
  const auto rows = parse_csv(out);
  ASSERT_EQ(rows.size(), 3U);
  for (std::size_t k = 1; k < 3; ++k) {
    EXPECT_EQ(rows[k].back(), "incomplete");
    EXPECT_TRUE(rows[k][column(rows[0], "com_fidelity")].empty());
  }
  const int single = std::system((env + "leakage -i " + sample("leakage_n2.json") + " >/dev/null 2>&1").c_str());
  EXPECT_EQ(WEXITSTATUS(single), 3);
  const int bad = std::system(("ILE_MAX_TERMS=lots '" + kCli + "' leakage -i " + sample("leakage_n2.json") +
                               " >/dev/null 2>&1").c_str());
  EXPECT_EQ(WEXITSTATUS(bad), 2);
}

TEST_F(Cli, DeterministicAcrossRunsAndThreadCounts) {
  const auto args = "leakage -i " + sample("leakage_n2.json") + " --integrated --paper-beta --sweep delta=0.95:0.999:6";
  const auto a = run(args + " --jobs 1");
  const auto b = run(args + " --jobs 4");
  const auto c = run(args + " --jobs 4");
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(b.out, c.out);
  const auto p1 = run("plan --all -i " + sample("even_cat_target.json"));
  const auto p2 = run("plan --all -i " + sample("even_cat_target.json"));
  EXPECT_EQ(p1.out, p2.out);
}

TEST_F(Cli, OutputFileMatchesStdout) {
  const auto stdout_run = run("simulate -i " + sample("even_cat_plan.json"));
  ASSERT_EQ(run("simulate -i " + sample("even_cat_plan.json") + " -o '" + path("o.json") + "'").code, 0);
  std::ifstream in(path("o.json"), std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), stdout_run.out);
}

TEST_F(Cli, ValidateSingleIon) {
  const auto r = run("validate -i " + sample("validate_n1.json") + " --cutoff 16 --steps 200");
  ASSERT_EQ(r.code, 0);
  const auto j = json::parse(r.out);
  const auto& rep = j["report"];
  EXPECT_GE(rep["convergence_ratio"].get<double>(), 3.5);
  EXPECT_LE(rep["convergence_ratio"].get<double>(), 4.5);
  EXPECT_GE(rep["fidelity_integrated"].get<double>(), rep["fidelity_printed"].get<double>());
  EXPECT_TRUE(rep["full_terms_effect"].is_null());
  EXPECT_EQ(j["header"]["cutoff"], 16);
  EXPECT_EQ(j["header"]["params"]["n_ions"], 1);
}

TEST_F(Cli, ValidateErrors) {
  const auto three = write("v.json", R"({"eta":0.05,"omega":0.005,"delta":0.99,"n_ions":3,"t":100})");
  EXPECT_EQ(run("validate -i " + three).code, 2);
  EXPECT_EQ(run("validate -i " + sample("validate_n1.json") + " --steps 5").code, 2);
  // (1 - delta) dt of order one: convergence is not asymptotic.
  EXPECT_EQ(run("validate -i " + sample("validate_n1.json") + " --set delta=0.5 --set t=200 --cutoff 8 --steps 10")
                .code,
            3);
}

}  // namespace
