#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "paddy/cli.hpp"
#include "paddy/phenology.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run paddy_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = paddy::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

const std::vector<std::string> kQuick{"--epochs", "4", "--batch-size", "32"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("synth") {
  const auto dir = oracle::scratch_dir("cli_synth");
  const auto a = (dir / "a.csv").string(), b = (dir / "b.csv").string();
  const auto r = paddy_cli({"synth", "--per-class", "100", "--seed", "3", "--out", a});
  REQUIRE(r.code == 0);
  CHECK(line_count(oracle::slurp(a)) == 501);
  CHECK(r.out.find("wrote 500 samples") != std::string::npos);
  REQUIRE(paddy_cli({"synth", "--per-class", "100", "--seed", "3", "--out", b}).code == 0);
  CHECK(oracle::slurp(a) == oracle::slurp(b));

  CHECK(paddy_cli({"synth", "--per-class", "0", "--out", a}).code == 1);
  CHECK(paddy_cli({"synth", "--out", a}).code == 1);
}

TEST_CASE("train, predict") {
  const auto dir = oracle::scratch_dir("cli_train");
  const auto data = (dir / "d.csv").string();
  REQUIRE(paddy_cli({"synth", "--per-class", "40", "--noise", "0.02", "--seed", "5", "--out", data}).code == 0);

  SUBCASE("unknown method lists the valid ones") {
    const auto r = paddy_cli(with({"train", "--method", "svm", "--data", data, "--out", (dir / "x").string()}, kQuick));
    CHECK(r.code == 1);
    CHECK(r.err.find("cnn+bn+dropout") != std::string::npos);
  }
  SUBCASE("outputs are byte-identical across runs") {
    const auto p1 = (dir / "r1").string(), p2 = (dir / "r2").string();
    for (const auto& p : {p1, p2})
      REQUIRE(paddy_cli(with({"train", "--method", "dnn+bn+dropout", "--data", data, "--out", p}, kQuick)).code == 0);
    for (const char* ext : {".model", ".report.csv", ".report.txt"}) CHECK(oracle::slurp(p1 + ext) == oracle::slurp(p2 + ext));
  }
  SUBCASE("predict on the saved training split reproduces train accuracy") {
    const auto p = (dir / "s").string();
    const auto t = paddy_cli(with({"train", "--method", "lr", "--data", data, "--out", p, "--save-splits"}, kQuick));
    REQUIRE(t.code == 0);
    const auto report = oracle::slurp(p + ".report.txt");
    const auto at = report.find("train_accuracy ") + 15;
    const std::string train_acc = report.substr(at, report.find('\n', at) - at);

    const auto pred = paddy_cli({"predict", "--model", p + ".model", "--data", p + ".train.csv", "--out", p + ".pred.csv"});
    REQUIRE(pred.code == 0);
    const auto nt = report.find("n_train ") + 8;
    const std::string n_train = report.substr(nt, report.find('\n', nt) - nt);
    CHECK(pred.out == n_train + " rows, accuracy on " + n_train + " labelled rows " + train_acc + "\n");
    const auto csv = oracle::slurp(p + ".pred.csv");
    CHECK(csv.starts_with("row_index,stage,p_GS1,p_GS2,p_GS3,p_GS4,p_GS5\n"));
    CHECK(line_count(csv) == std::stoul(n_train) + 1);
  }
  SUBCASE("empty and damaged inputs") {
    const auto p = (dir / "e").string();
    REQUIRE(paddy_cli(with({"train", "--method", "lr", "--data", data, "--out", p}, kQuick)).code == 0);
    write_file(dir / "empty.csv", "");
    CHECK(paddy_cli({"predict", "--model", p + ".model", "--data", (dir / "empty.csv").string(), "--out", (dir / "o.csv").string()}).code == 0);
    CHECK(fs::file_size(dir / "o.csv") == 0);

    auto model = oracle::slurp(p + ".model");
    model.resize(model.size() / 2);
    write_file(dir / "bad.model", model);
    const auto r = paddy_cli({"predict", "--model", (dir / "bad.model").string(), "--data", data, "--out", (dir / "o.csv").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("section '") != std::string::npos);
    CHECK(paddy_cli({"predict", "--model", p + ".model", "--data", (dir / "nope.csv").string(), "--out", (dir / "o.csv").string()}).code == 2);
  }
  SUBCASE("divergence exits 3") {
    const auto r = paddy_cli({"train", "--method", "dnn", "--data", data, "--out", (dir / "big").string(),
                              "--epochs", "3", "--learning-rate", "1e200"});
    CHECK(r.code == 3);
  }
  SUBCASE("config file with an overriding flag") {
    write_file(dir / "run.cfg", "# quick run\nepochs = 2\nbatch_size = 16\nmethod = lr\n");
    const auto r = paddy_cli({"train", "--config", (dir / "run.cfg").string(), "--data", data, "--out",
                              (dir / "c").string(), "--epochs", "3"});
    REQUIRE(r.code == 0);
    CHECK(r.err.find("experiment.epochs = 3") != std::string::npos);
    CHECK(r.err.find("experiment.batch_size = 16") != std::string::npos);

    write_file(dir / "typo.cfg", "epochs = 2\nbatchsize = 16\n");
    const auto bad = paddy_cli({"train", "--config", (dir / "typo.cfg").string(), "--method", "lr", "--data", data,
                                "--out", (dir / "c").string()});
    CHECK(bad.code == 1);
    CHECK(bad.err.find("typo.cfg:2") != std::string::npos);
  }
}

TEST_CASE("phenology") {
  const auto dir = oracle::scratch_dir("cli_phen");
  const auto series = (dir / "s.csv").string(), out = (dir / "st.csv").string();
  {
    std::ofstream f(series);
    paddy::write_series(f, paddy::canonical_profile().series());
  }
  const auto r = paddy_cli({"phenology", "--series", series, "--out", out});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("flooding 2015-") != std::string::npos);
  CHECK(line_count(oracle::slurp(out)) == 24);
  CHECK(paddy_cli({"phenology", "--series", series, "--out", out, "--window", "4"}).code == 1);

  std::string flat = "date,evi,lswi\n";
  for (int i = 0; i < 8; ++i) flat += "2020-01-" + std::string(i < 9 ? "0" : "") + std::to_string(i + 1) + ",0.3,-0.2\n";
  write_file(dir / "flat.csv", flat);
  const auto f = paddy_cli({"phenology", "--series", (dir / "flat.csv").string(), "--out", out});
  CHECK(f.code == 0);
  CHECK(f.err.find("warning") != std::string::npos);
  const auto labels = oracle::slurp(out);
  std::size_t gs5 = 0;
  for (auto at = labels.find(",GS5"); at != std::string::npos; at = labels.find(",GS5", at + 1)) ++gs5;
  CHECK(gs5 == 8);

  write_file(dir / "short.csv", "date,evi,lswi\n2020-01-01,0.1,0\n2020-01-17,0.2,0\n2020-02-02,0.3,0\n");
  CHECK(paddy_cli({"phenology", "--series", (dir / "short.csv").string(), "--out", out}).code == 2);
}

TEST_CASE("report and help") {
  const auto dir = oracle::scratch_dir("cli_report");
  const auto data = (dir / "d.csv").string();
  REQUIRE(paddy_cli({"synth", "--per-class", "30", "--seed", "2", "--out", data}).code == 0);
  const auto r = paddy_cli(with({"report", "--methods", "lr,cnn", "--data", data, "--out", (dir / "sum.csv").string()}, kQuick));
  REQUIRE(r.code == 0);
  CHECK(r.out.find("| LR ") != std::string::npos);
  CHECK(r.out.find("| CNN ") != std::string::npos);
  CHECK(line_count(oracle::slurp((dir / "sum.csv").string())) == 3);

  CHECK(paddy_cli({"--help"}).code == 0);
  CHECK(paddy_cli({"train", "--help"}).code == 0);
  CHECK(paddy_cli({}).code == 1);
}
