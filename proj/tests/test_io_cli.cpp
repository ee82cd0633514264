#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "oracles.hpp"

using namespace splitkl;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("splitkl_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                         "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

void write_file(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "splitkl");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST(SampleFile, ParsesHeaderAndValues) {
  std::istringstream in("# lo=-1 hi=1\n0.5\n\n-1\n 1 \n");
  const auto sf = read_sample_file(in);
  EXPECT_EQ(sf.values, (std::vector<double>{0.5, -1, 1}));
  EXPECT_EQ(sf.lo, -1.0);
  EXPECT_EQ(sf.hi, 1.0);
  EXPECT_EQ(sf.mu, 0.0);
}

TEST(SampleFile, ReportsLineOfBadValue) {
  std::istringstream in("0.1\n0.2\nabc\n");
  try {
    read_sample_file(in);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::istringstream empty("");
  EXPECT_THROW(read_sample_file(empty), ParseError);
  std::istringstream bad_key("# foo=1\n0.1\n");
  EXPECT_THROW(read_sample_file(bad_key), ParseError);
}

TEST(LossCsv, RoundTripReproducesStats) {
  const auto ens = synth_ensemble(4, 300, "correlated", 0.8, 12, 0);
  std::stringstream csv;
  write_loss_csv(csv, ens.train);
  const auto back = read_loss_csv(csv);
  EXPECT_EQ(back.loss, ens.train.loss);
  EXPECT_EQ(back.oob, ens.train.oob);
  const auto a = compute_tandem_stats(ens.train), b = compute_tandem_stats(back);
  EXPECT_EQ(a.tandem_loss, b.tandem_loss);
  EXPECT_EQ(a.single_loss, b.single_loss);
  EXPECT_EQ(a.n, b.n);
  EXPECT_EQ(a.m, b.m);
}

TEST(LossCsv, RejectsMalformedInput) {
  std::istringstream wrong_header("h,e,l,o\n0,0,1,1\n");
  EXPECT_THROW(read_loss_csv(wrong_header), ParseError);
  std::istringstream bad_loss("hypothesis_id,example_id,loss,oob\n0,0,2,1\n");
  EXPECT_THROW(read_loss_csv(bad_loss), ParseError);
  std::istringstream dup("hypothesis_id,example_id,loss,oob\n0,0,1,1\n0,0,0,1\n");
  EXPECT_THROW(read_loss_csv(dup), ParseError);
  std::istringstream fields("hypothesis_id,example_id,loss,oob\n0,0,1\n");
  EXPECT_THROW(read_loss_csv(fields), ParseError);
}

TEST(LossCsv, MissingCellsAreNotOutOfBag) {
  std::istringstream in("hypothesis_id,example_id,loss,oob\n10,1,1,1\n10,2,0,1\n20,2,1,1\n");
  const auto plm = read_loss_csv(in);
  ASSERT_EQ(plm.hypotheses(), 2u);
  ASSERT_EQ(plm.examples(), 2u);
  EXPECT_EQ(plm.oob(1, 0), 0);
  EXPECT_EQ(plm.oob(1, 1), 1);
  EXPECT_EQ(plm.loss(1, 1), 1);
}

TEST(EvalCsv, RoundTripAndFullMatrix) {
  const auto ens = synth_ensemble(3, 50, "independent", 0.8, 5, 40);
  std::stringstream csv;
  write_eval_csv(csv, ens.eval);
  const auto back = read_eval_csv(csv);
  EXPECT_EQ(back.predictions, ens.eval.predictions);
  EXPECT_EQ(back.labels, ens.eval.labels);
  std::istringstream partial("hypothesis_id,example_id,prediction,label\n0,0,1,1\n1,1,0,0\n");
  EXPECT_THROW(read_eval_csv(partial), ParseError);
}

TEST(Format, TwelveSignificantDigits) {
  EXPECT_EQ(format_number(0.1234567890123456), "0.123456789012");
  EXPECT_EQ(format_number(2.0), "2");
  EXPECT_EQ(round12(1.0 / 3.0), 0.333333333333);
}

TEST(CliBound, EmpiricalBernsteinOnZeros) {
  TempDir dir;
  std::string text = "# lo=0 hi=1 mu=0.5\n";
  for (int i = 0; i < 100; ++i) text += "0\n";
  write_file(dir.file("zeros.txt"), text);
  const auto r = run({"bound", "--bound", "eb", dir.file("zeros.txt")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = cli::Json::parse(r.out);
  ASSERT_EQ(doc["reports"].size(), 1u);
  EXPECT_EQ(doc["reports"][0]["name"], "eb");
  EXPECT_NEAR(doc["reports"][0]["value"].get<double>(), 7.0 * std::log(40.0) / 297.0, 1e-9);
}

TEST(CliBound, AllOnTernaryFile) {
  TempDir dir;
  write_file(dir.file("t.txt"), "# lo=-1 hi=1 mu=0\n-1\n0\n1\n1\n0\n");
  const auto r = run({"bound", "--bound", "all", dir.file("t.txt")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = cli::Json::parse(r.out);
  std::vector<std::string> names;
  for (const auto& rep : doc["reports"]) names.push_back(rep["name"]);
  EXPECT_EQ(names, (std::vector<std::string>{"kl", "eb", "ub", "skl"}));
}

TEST(CliBound, ErrorCodes) {
  TempDir dir;
  write_file(dir.file("empty.txt"), "");
  EXPECT_EQ(run({"bound", dir.file("empty.txt")}).code, 2);
  write_file(dir.file("bad.txt"), "0.1\nx\n");
  const auto bad = run({"bound", dir.file("bad.txt")});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("line 2"), std::string::npos) << bad.err;
  write_file(dir.file("out.txt"), "# lo=0 hi=1\n0.5\n1.5\n");
  EXPECT_EQ(run({"bound", dir.file("out.txt")}).code, 3);
  EXPECT_EQ(run({"bound", dir.file("missing.txt")}).code, 2);
  EXPECT_EQ(run({"bound", "--bound", "nope", dir.file("out.txt")}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({}).code, 2);
}

TEST(CliSimulate, DeterministicWithSchema) {
  TempDir dir;
  const std::vector<std::string> base{"simulate", "--mode", "symmetric", "--n", "100", "--repeats", "5", "--seed", "7"};
  auto a = base, b = base;
  a.insert(a.end(), {"--out", dir.file("a.csv")});
  b.insert(b.end(), {"--out", dir.file("b.csv"), "--threads", "3"});
  ASSERT_EQ(run(a).code, 0);
  ASSERT_EQ(run(b).code, 0);
  const std::string text = read_file(dir.file("a.csv"));
  EXPECT_EQ(text, read_file(dir.file("b.csv")));
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "param,bound,gap_mean,gap_std,repeats,n,delta,seed");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 50u * 4u);
  EXPECT_EQ(run({"simulate", "--mode", "bogus"}).code, 2);
}

TEST(CliSimulate, SpectrumParamRange) {
  const auto r = run({"simulate", "--mode", "spectrum", "--n", "20", "--repeats", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  double lo = 1, hi = 0;
  while (std::getline(in, line)) {
    const double p = std::stod(line.substr(0, line.find(',')));
    lo = std::min(lo, p);
    hi = std::max(hi, p);
  }
  EXPECT_NEAR(lo, 0.002, 1e-4);
  EXPECT_NEAR(hi, 0.998, 1e-4);
}

TEST(CliCoverage, ExitCodes) {
  const auto ok = run({"coverage", "--ternary", "0.25,0.5,0.25", "--trials", "1000", "--seed", "3"});
  EXPECT_EQ(ok.code, 0) << ok.out << ok.err;
  const auto doc = cli::Json::parse(ok.out);
  EXPECT_EQ(doc["bounds"].size(), 5u);
  EXPECT_EQ(run({"coverage", "--ternary", "0.25,0.5,0.25", "--trials", "10"}).code, 2);
  EXPECT_EQ(run({"coverage", "--trials", "200"}).code, 2);
  EXPECT_EQ(run({"coverage", "--ternary", "0.25,0.5"}).code, 2);
  EXPECT_EQ(run({"coverage", "--ternary", "0.5,0.5,0.5", "--trials", "200"}).code, 3);
  // A delta = 0.9 run on fair coin flips breaks the 0.05 ceiling for kl.
  const auto strict =
      run({"coverage", "--ternary", "0.5,0,0.5", "--delta", "0.9", "--ceiling-delta", "0.05", "--trials", "1000"});
  EXPECT_EQ(strict.code, 1) << strict.out;
}

TEST(CliMv, CollapseAtAlphaZero) {
  const auto r = run({"mv", "--synthetic", "correlated", "--hypotheses", "4", "--examples", "400", "--bounds",
                      "tnd,ccpbskl", "--alpha", "0", "--eval-examples", "1000", "--seed", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = cli::Json::parse(r.out);
  ASSERT_EQ(doc["bounds"].size(), 2u);
  EXPECT_NEAR(doc["bounds"][0]["value"].get<double>(), doc["bounds"][1]["value"].get<double>(), 1e-12);
}

TEST(CliMv, SingleHypothesisLossFile) {
  TempDir dir;
  std::string csv = "hypothesis_id,example_id,loss,oob\n";
  for (int i = 0; i < 80; ++i) csv += "0," + std::to_string(i) + "," + (i < 12 ? "1" : "0") + ",1\n";
  write_file(dir.file("one.csv"), csv);
  const auto r = run({"mv", "--losses", dir.file("one.csv"), "--bounds", "tnd"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = cli::Json::parse(r.out);
  const double expected = 4 * oracle::kl_inv_upper(12.0 / 80, std::log(4 * std::sqrt(80.0) / 0.05) / 80);
  EXPECT_NEAR(doc["bounds"][0]["value"].get<double>(), expected, 1e-9);
}

TEST(CliMv, EmptyOverlapAndMalformedInput) {
  TempDir dir;
  write_file(dir.file("split.csv"),
             "hypothesis_id,example_id,loss,oob\n0,0,1,1\n0,1,0,0\n1,0,0,0\n1,1,1,1\n");
  const auto r = run({"mv", "--losses", dir.file("split.csv")});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("0 and 1"), std::string::npos) << r.err;
  write_file(dir.file("bad.csv"), "hypothesis_id,example_id,loss,oob\n0,0,1\n");
  EXPECT_EQ(run({"mv", "--losses", dir.file("bad.csv")}).code, 2);
  EXPECT_EQ(run({"mv"}).code, 2);
  EXPECT_EQ(run({"mv", "--synthetic", "correlated", "--bounds", "xyz"}).code, 2);
  EXPECT_EQ(run({"mv", "--synthetic", "correlated", "--alpha", "0.5"}).code, 3);
}

TEST(CliMv, EmitAndReingestIsDeterministic) {
  TempDir dir;
  const auto first = run({"mv", "--synthetic", "independent", "--hypotheses", "3", "--examples", "300",
                          "--eval-examples", "500", "--seed", "4", "--bounds", "tnd,cctnd", "--emit-losses",
                          dir.file("l.csv"), "--emit-eval", dir.file("e.csv"), "--out", dir.file("a.json")});
  ASSERT_EQ(first.code, 0) << first.err;
  const auto second = run({"mv", "--losses", dir.file("l.csv"), "--eval", dir.file("e.csv"), "--bounds", "tnd,cctnd",
                           "--out", dir.file("b.json")});
  ASSERT_EQ(second.code, 0) << second.err;
  const auto a = cli::Json::parse(read_file(dir.file("a.json")));
  const auto b = cli::Json::parse(read_file(dir.file("b.json")));
  EXPECT_EQ(a["bounds"][0]["value"], b["bounds"][0]["value"]);
  EXPECT_EQ(a["bounds"][1]["rho"], b["bounds"][1]["rho"]);
  EXPECT_EQ(a["bounds"][1]["mv_risk"], b["bounds"][1]["mv_risk"]);
  const auto again = run({"mv", "--synthetic", "independent", "--hypotheses", "3", "--examples", "300",
                          "--eval-examples", "500", "--seed", "4", "--bounds", "tnd,cctnd", "--threads", "4",
                          "--out", dir.file("c.json")});
  ASSERT_EQ(again.code, 0);
  EXPECT_EQ(read_file(dir.file("a.json")), read_file(dir.file("c.json")));
}
