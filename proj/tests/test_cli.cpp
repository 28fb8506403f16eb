#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace {

struct RunResult {
  int code = -1;
  std::string out;  // stdout and stderr interleaved
};

RunResult run(const std::string& args) {
  std::string cmd = std::string("'") + CHP_CLI_PATH + "' " + args + " 2>&1";
  FILE* f = popen(cmd.c_str(), "r");
  REQUIRE(f != nullptr);
  RunResult r;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), f)) > 0) r.out.append(buf.data(), n);
  int st = pclose(f);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string fix(const std::string& name) {
  return std::string("'") + CHP_FIXTURES_DIR + "/" + name + "'";
}

std::string slurp(const std::string& name) {
  std::ifstream in(std::string(CHP_FIXTURES_DIR) + "/" + name, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string write_temp(const std::string& name, const std::string& content) {
  std::string path = "/tmp/chp_cli_test_" + name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  REQUIRE(out.good());
  out << content;
  out.close();
  return path;
}

}  // namespace

TEST_CASE("parse echoes the canonical program form") {
  RunResult r = run("parse " + fix("running.chp"));
  CHECK(r.code == 0);
  CHECK(r.out == slurp("running.chp"));
}

TEST_CASE("parse reports positions for malformed programs") {
  std::string bad = write_temp("bad.chp", "while (x = ) { skip }\n");
  RunResult r = run("parse '" + bad + "'");
  CHECK(r.code == 2);
  CHECK(r.out.rfind("error: ", 0) == 0);
  CHECK(r.out.find("expected an arithmetic expression, got ')' at line 1, column 12") !=
        std::string::npos);
}

TEST_CASE("wlp prints an exact two-sided enclosure per state") {
  RunResult coin = run("wlp " + fix("fair_coin.chp") + " --post " + fix("x_eq_0.exp") +
                        " --state " + fix("empty.st") + " --values 0..1 --heap-cap 0");
  CHECK(coin.code == 0);
  CHECK(coin.out == "1/2\t1/2\texact\n");

  std::string rbounds = " --values -1..1 --locs 7 --heap-cap 1";
  RunResult ok = run("wlp " + fix("running.chp") + " --post " + fix("y_eq_0.exp") +
                     " --state " + fix("running.st") + rbounds);
  CHECK(ok.code == 0);
  CHECK(ok.out == "1/2\t1/2\texact\n");
  RunResult unalloc = run("wlp " + fix("running.chp") + " --post " + fix("y_eq_0.exp") +
                          " --state " + fix("running_unalloc.st") + rbounds);
  CHECK(unalloc.code == 0);
  CHECK(unalloc.out == "0\t0\texact\n");

  RunResult div = run("wlp " + fix("diverge.chp") + " --post " + fix("one.exp") +
                      " --state " + fix("empty.st") + " --values 0..0 --heap-cap 0");
  CHECK(div.code == 0);
  CHECK(div.out == "1\t1\texact\n");

  RunResult table = run("wlp " + fix("fair_coin.chp") + " --post " + fix("x_eq_0.exp") +
                        " --state " + fix("empty.st") +
                        " --values 0..1 --heap-cap 0 --report table");
  CHECK(table.code == 0);
  CHECK(table.out == "{x=0}\t{}\t1/2\t1/2\texact\n");
}

TEST_CASE("eval prints the exact value at the given state") {
  RunResult r = run("eval --exp " + fix("y_eq_0.exp") + " --state " + fix("running.st") +
                    " --values -1..1 --locs 7 --heap-cap 1");
  CHECK(r.code == 0);
  CHECK(r.out == "1\n");
}

TEST_CASE("wrlp iterates the step-indexed value from above") {
  std::string base = "wrlp " + fix("fair_coin.chp") + " --post " + fix("x_eq_0.exp") +
                     " --state " + fix("empty.st") + " --values 0..1 --heap-cap 0";
  RunResult five = run(base + " --iters 5");
  CHECK(five.code == 0);
  CHECK(five.out == "1/2\n");
  RunResult zero = run(base + " --iters 0");
  CHECK(zero.code == 0);
  CHECK(zero.out == "1\n");
}

TEST_CASE("check certifies the good script and replays the bad one") {
  std::string bounds = " --values -1..7 --locs 7 --heap-cap 1";
  RunResult good = run("check " + fix("running_example.proof") + bounds);
  CHECK(good.code == 0);
  CHECK(good.out.rfind("certificate: 18 nodes\n", 0) == 0);
  CHECK(good.out.find("root\twlp-wrlp\t") != std::string::npos);
  CHECK(good.out.find("root.0.0.0.1\tconcur\t") != std::string::npos);

  RunResult bad = run("check " + fix("running_example_bad.proof") + bounds);
  CHECK(bad.code == 1);
  CHECK(bad.out ==
        "EntailmentFails at root.0.0.0.1.0 (p-choice): preexpectation is the "
        "probability mix of branch pres (left side exceeds right side)\n"
        "  witness stack {r=0, y=0}, heap {}: lhs = 3/5, rhs = 1/2\n"
        "  lhs: 3/5\n"
        "  rhs: 1/2 * 1 + 1/2 * 0\n");

  std::string broken = write_temp("broken.proof",
                                  "{\"judgement\": {\"pre\": \"1\", \"cmd\": "
                                  "\"skip\", \"post\": \"1\"}}\n");
  RunResult schema = run("check '" + broken + "'" + bounds);
  CHECK(schema.code == 2);
  CHECK(schema.out.find("proof schema error") != std::string::npos);
  CHECK(schema.out.find("missing field 'rule'") != std::string::npos);
}

TEST_CASE("simulate prints reproducible TSV statistics") {
  std::string cmd = "simulate " + fix("fair_coin.chp") + " --post " + fix("x_eq_0.exp") +
                    " --state " + fix("empty.st") +
                    " --values 0..1 --heap-cap 0 --seed 7";
  RunResult r = run(cmd);
  CHECK(r.code == 0);
  CHECK(r.out ==
        "trials\tmean\tstderr\taborted%\tcutoff%\n"
        "10000\t4947/10000\t0.00499997\t0\t0\n");
  RunResult again = run(cmd);
  CHECK(again.out == r.out);

  RunResult badpol = run(cmd + " --policy bogus");
  CHECK(badpol.code == 2);
  CHECK(badpol.out.find(
            "error: --policy must be uniform, round-robin, or priority:<prefix>;...") !=
        std::string::npos);
}

TEST_CASE("ast answers yes/no with a confining witness") {
  RunResult yes = run("ast " + fix("fair_coin.chp") + " --values 0..1 --heap-cap 0");
  CHECK(yes.code == 0);
  CHECK(yes.out == "yes\n");

  RunResult no = run("ast " + fix("diverge.chp") + " --values 0..0 --heap-cap 0");
  CHECK(no.code == 1);
  CHECK(no.out == "no\nwitness: <diverge | {} | {}>\n");

  std::string prog = slurp("running.chp");
  while (!prog.empty() && prog.back() == '\n') prog.pop_back();
  RunResult run_no = run("ast " + fix("running.chp") + " --state " + fix("running.st") +
                         " --values -1..1 --locs 7 --heap-cap 1");
  CHECK(run_no.code == 1);
  CHECK(run_no.out == "no\nwitness: <" + prog + " | {r=7, y=0} | {7|->-1}>\n");
}

TEST_CASE("emit-mdp dumps transitions and the config table") {
  RunResult r = run("emit-mdp " + fix("fair_coin.chp") + " --state " + fix("empty.st") +
                    " --values 0..1 --heap-cap 0");
  CHECK(r.code == 0);
  CHECK(r.out ==
        "0 prob 1/2 1\n"
        "0 prob 1/2 2\n"
        "1 assign 1 3\n"
        "2 assign 1 4\n"
        "\n"
        "0\t-\t<{ x := 0 } [1/2] { x := 1 } | {x=0} | {}>\n"
        "1\t-\t<x := 0 | {x=0} | {}>\n"
        "2\t-\t<x := 1 | {x=0} | {}>\n"
        "3\tfinal\t<skip | {x=0} | {}>\n"
        "4\tfinal\t<skip | {x=1} | {}>\n");
}

TEST_CASE("flag validation exits with code two") {
  RunResult missing = run("wlp " + fix("fair_coin.chp") + " --post " + fix("x_eq_0.exp") +
                          " --state " + fix("empty.st") + " --heap-cap 0");
  CHECK(missing.code == 2);

  RunResult locless = run("wlp " + fix("fair_coin.chp") + " --post " + fix("x_eq_0.exp") +
                          " --state " + fix("empty.st") + " --values 0..1 --heap-cap 1");
  CHECK(locless.code == 2);
  CHECK(locless.out.find(
            "error: --heap-cap is positive but no --locs were declared") !=
        std::string::npos);

  RunResult help = run("--help");
  CHECK(help.code == 0);
  CHECK(help.out.find("wlp") != std::string::npos);
}
