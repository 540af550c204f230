#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " '" ORCHARD_CLI_PATH "' " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, p)) > 0;) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string read(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> contents(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = read(e.path());
  return out;
}

struct Workspace {
  fs::path root = fs::temp_directory_path() / ("orchard_cli_" + std::to_string(::getpid()));
  Workspace() {
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Workspace() {
    std::error_code ec;
    fs::remove_all(root, ec);
  }
  std::string p(const std::string& name) const { return (root / name).string(); }
};

const Workspace& ws() {
  static Workspace w;
  static bool ready = false;
  if (!ready) {
    REQUIRE(run("synth --n 8 --width 128 --height 96 --seed 3 --sky mixed --out " + w.p("data")).code == 0);
    REQUIRE(run("features --data " + w.p("data") + " --source truth --out " + w.p("f.csv")).code == 0);
    ready = true;
  }
  return w;
}

std::string small_train(const Workspace& w) {
  return "train --features " + w.p("f.csv") + " --arch 6 --lr 0.5 --epochs 50 --goal 0 --split 50,25,25";
}

}  // namespace

TEST_CASE("usage errors exit with 1") {
  CHECK(run("").code == 1);
  CHECK(run("frobnicate").code == 1);
  CHECK(run("synth --n 2").code == 1);
  CHECK(run("synth --out /tmp/x --variety green").code == 1);
  CHECK(run("segment --input a.ppm --batch d --out o").code == 1);
  CHECK(run("train --features f.csv --model m --arch 1,2,3").code == 1);
  CHECK(run("--help").code == 0);
  CHECK(run("--version").out.find('.') != std::string::npos);
}

TEST_CASE("synth is reproducible") {
  const Workspace& w = ws();
  CHECK(contents(w.p("data")).size() == 8 * 3 + 1);
  REQUIRE(run("synth --n 8 --width 128 --height 96 --seed 3 --sky mixed --out " + w.p("data2")).code == 0);
  CHECK(contents(w.p("data")) == contents(w.p("data2")));
  REQUIRE(run("synth --n 8 --width 128 --height 96 --seed 3 --sky mixed --out " + w.p("data3"), "ORCHARD_THREADS=1")
              .code == 0);
  CHECK(contents(w.p("data")) == contents(w.p("data3")));
  CHECK(run("synth --n 1 --out " + w.p("x"), "ORCHARD_THREADS=0").code == 1);
  CHECK(run("synth --n 1 --glare 1.5 --out " + w.p("x")).code == 3);
}

TEST_CASE("segment writes six files and an optional confusion section") {
  const Workspace& w = ws();
  const std::string base = "segment --input " + w.p("data/0000.ppm") + " --out " + w.p("seg");
  const Run plain = run(base);
  REQUIRE(plain.code == 0);
  CHECK(contents(w.p("seg")).size() == 6);
  CHECK(fs::exists(w.p("seg/0000.classmap.pgm")));
  CHECK(fs::exists(w.p("seg/0000.apple.pgm")));
  CHECK(plain.out.find("threshold apple:") != std::string::npos);
  CHECK(plain.out.find("pixel_accuracy") == std::string::npos);

  const Run scored = run(base + " --stem scored --truth " + w.p("data/0000.truth.pgm"));
  REQUIRE(scored.code == 0);
  CHECK(scored.out.find("pixel_accuracy=") != std::string::npos);
  CHECK(read(w.p("seg/scored.report.txt")) == scored.out);

  // Scene 0002 has a cloudy sky (skies alternate in pairs).
  const Run cloudy = run("segment --input " + w.p("data/0002.ppm") + " --sky cloudy --out " + w.p("seg2") +
                         " --truth " + w.p("data/0002.truth.pgm"));
  REQUIRE(cloudy.code == 0);
  const auto pos = cloudy.out.find("sky precision=");
  REQUIRE(pos != std::string::npos);
  const double f1 = std::stod(cloudy.out.substr(cloudy.out.find("f1=", pos) + 3));
  CHECK(f1 >= 0.95);

  CHECK(run("segment --input " + w.p("nope.ppm") + " --out " + w.p("seg")).code == 2);
  const Run batch = run("segment --batch " + w.p("data") + " --batch-truth --out " + w.p("batch"));
  CHECK(batch.code == 0);
  CHECK(std::count(batch.out.begin(), batch.out.end(), ',') > 8 * 5);
}

TEST_CASE("profile") {
  const Workspace& w = ws();
  {
    std::ofstream img(w.p("flat.ppm"), std::ios::binary);
    img << "P6\n4 3\n255\n";
    for (int i = 0; i < 12; ++i) img << static_cast<char>(10) << static_cast<char>(20) << static_cast<char>(30);
  }
  const Run r = run("profile --input " + w.p("flat.ppm") + " --row 1");
  REQUIRE(r.code == 0);
  CHECK(r.out == "x,R,G,B\n0,10,20,30\n1,10,20,30\n2,10,20,30\n3,10,20,30\n");
  CHECK(run("profile --input " + w.p("flat.ppm") + " --row 3").code == 3);
  CHECK(run("profile --input " + w.p("flat.ppm") + " --row 0 --out " + w.p("row.csv")).code == 0);
  CHECK(read(w.p("row.csv")).rfind("x,R,G,B\n", 0) == 0);
}

TEST_CASE("features") {
  const Workspace& w = ws();
  const std::string csv = read(w.p("f.csv"));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 8 * 4 + 1);
  REQUIRE(run("features --data " + w.p("data") + " --out " + w.p("g.csv")).code == 0);
  REQUIRE(run("features --data " + w.p("data") + " --out " + w.p("h.csv"), "ORCHARD_THREADS=1").code == 0);
  CHECK(read(w.p("g.csv")) == read(w.p("h.csv")));
  CHECK(run("features --data " + w.p("nowhere") + " --out " + w.p("g.csv")).code == 2);
  CHECK(run("features --data " + w.p("data") + " --source magic --out " + w.p("g.csv")).code == 1);
}

TEST_CASE("train, classify and eval") {
  const Workspace& w = ws();
  const Run t = run(small_train(w) + " --model " + w.p("m1") + " --report " + w.p("r1") + " --log " + w.p("l1"));
  REQUIRE(t.code == 0);
  CHECK(t.out.find("wall_time_s:") != std::string::npos);
  const std::string report = read(w.p("r1"));
  CHECK(report.find("wall_time_s") == std::string::npos);
  CHECK(report.find("architecture: 3-6-1") != std::string::npos);
  CHECK(report.find("epochs: 50\n") != std::string::npos);
  CHECK(report.find("split: 16/8/8") != std::string::npos);
  const std::string log = read(w.p("l1"));
  CHECK(std::count(log.begin(), log.end(), '\n') == 51);

  REQUIRE(run(small_train(w) + " --model " + w.p("m2") + " --report " + w.p("r2") + " --log " + w.p("l2")).code == 0);
  CHECK(read(w.p("m1")) == read(w.p("m2")));
  CHECK(read(w.p("m1.scale")) == read(w.p("m2.scale")));
  CHECK(read(w.p("r1")) == read(w.p("r2")));
  CHECK(read(w.p("l1")) == read(w.p("l2")));

  CHECK(run(small_train(w) + " --model " + w.p("m3") + " --mu 1.5").code == 3);
  CHECK(run(small_train(w) + " --model " + w.p("m3") + " --split 60,20").code == 1);
  CHECK(run("train --features " + w.p("missing.csv") + " --model " + w.p("m3")).code == 2);

  const Run c = run("classify --model " + w.p("m1") + " --input " + w.p("data/0000.ppm") + " --out " + w.p("c.txt"));
  REQUIRE(c.code == 0);
  CHECK(c.out.rfind("class,score,verdict,empty,f1,f2,f3\napple,", 0) == 0);
  CHECK(read(w.p("c.txt")) == c.out);
  CHECK(run("classify --model " + w.p("no-model") + " --input " + w.p("data/0000.ppm")).code == 2);

  const Run e = run("eval --model " + w.p("m1") + " --features " + w.p("f.csv"));
  REQUIRE(e.code == 0);
  CHECK(e.out.rfind("count: 32\n", 0) == 0);
}

TEST_CASE("config files: flags win over the file") {
  const Workspace& w = ws();
  {
    std::ofstream cfg(w.p("train.cfg"));
    cfg << "# training settings\narch = 4\nepochs = 12\nlr = 0.25\n";
  }
  const std::string base = "train --features " + w.p("f.csv") + " --goal 0 --split 50,25,25 --config " + w.p("train.cfg");
  REQUIRE(run(base + " --model " + w.p("c1") + " --report " + w.p("cr1")).code == 0);
  const std::string r1 = read(w.p("cr1"));
  CHECK(r1.find("architecture: 3-4-1") != std::string::npos);
  CHECK(r1.find("epochs: 12\n") != std::string::npos);
  CHECK(r1.find("learning_rate: 0.25\n") != std::string::npos);

  REQUIRE(run(base + " --epochs 7 --model " + w.p("c2") + " --report " + w.p("cr2")).code == 0);
  const std::string r2 = read(w.p("cr2"));
  CHECK(r2.find("epochs: 7\n") != std::string::npos);
  CHECK(r2.find("learning_rate: 0.25\n") != std::string::npos);

  {
    std::ofstream cfg(w.p("bad.cfg"));
    cfg << "colour = red\n";
  }
  CHECK(run("train --features " + w.p("f.csv") + " --model " + w.p("c3") + " --config " + w.p("bad.cfg")).code == 1);
  CHECK(run("train --features " + w.p("f.csv") + " --model " + w.p("c3") + " --config " + w.p("none.cfg")).code == 1);
}
