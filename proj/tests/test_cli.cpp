// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

class Sandbox {
 public:
  Sandbox() : dir_(fs::temp_directory_path() / ("emt_cli_" + std::to_string(::getpid()))) {
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  ~Sandbox() { fs::remove_all(dir_); }

  Result run(const std::string& args) const {
    const fs::path out = dir_ / "stdout.txt";
    const std::string cmd =
        "cd '" + dir_.string() + "' && '" EMT_BIN "' " + args + " > '" + out.string() + "' 2> /dev/null";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read("stdout.txt");
    return r;
  }

  std::string read(const std::string& name) const {
    std::ifstream f(dir_ / name, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  }

  bool exists(const std::string& name) const { return fs::exists(dir_ / name); }

 private:
  fs::path dir_;
};

}  // namespace

TEST_CASE("cli: oracle rows for a two-step copy") {
  Sandbox box;
  Result r = box.run("task oracle --task repeat-copy --s 2 --d 1 --inputs 1,-1 --horizon 4");
  CHECK(r.code == 0);
  CHECK(r.out == "t,phase,u1\n3,output,1\n4,output,-1\n5,output,1\n6,output,-1\n");

  r = box.run("task oracle --task repeat-copy --s 2 --d 1 --inputs 1,-1 --horizon 0");
  CHECK(r.code == 0);
  CHECK(r.out == "t,phase,u1\n");

  r = box.run("task oracle --task repeat-copy --s 2 --d 1 --inputs 1,-1 --horizon 1 --with-inputs");
  CHECK(r.out == "t,phase,u1\n1,input,1\n2,input,-1\n3,output,1\n");
}

TEST_CASE("cli: usage errors exit 2") {
  Sandbox box;
  CHECK(box.run("").code == 2);
  CHECK(box.run("bogus").code == 2);
  CHECK(box.run("task oracle --task nope --s 2 --d 1 --inputs 1,1").code == 2);
  CHECK(box.run("task oracle --task repeat-copy --s 2 --d 1 --inputs 1,1,1").code == 2);
  CHECK(box.run("train --iters 5").code == 2);
  CHECK(box.run("analyze spectrum --checkpoint missing.json --out x").code == 2);
}

TEST_CASE("cli: verify commands pass") {
  Sandbox box;
  for (const char* cmd : {"verify conjugacy --instances 3 --steps 50",
                          "verify circuit --task repeat-copy --s 8 --d 8 --hidden 64 --episodes 10",
                          "verify circuit --task compose-copy --s 3 --d 2 --task-seed 4 --embedding random --hidden 9",
                          "verify gradcheck --nets 2 --max-hidden 4 --max-horizon 5",
                          "verify mask --task compose-copy --s 3 --d 3 --task-seed 1"}) {
    CAPTURE(cmd);
    const Result r = box.run(cmd);
    CHECK(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j.at("pass") == true);
  }
}

TEST_CASE("cli: train with zero iterations and analysis outputs") {
  Sandbox box;
  Result r = box.run("train --task repeat-copy --s 2 --d 1 --hidden 6 --iters 0 --seed 3 --out ck.json");
  CHECK(r.code == 0);
  CHECK(box.exists("ck.json"));
  CHECK(box.exists("ck.json.report.csv"));
  CHECK(box.read("ck.json.report.csv") == "iteration,loss,horizon,accuracy\n");
  CHECK(box.exists("ck.json.manifest.json"));

  r = box.run("circuit build --task repeat-copy --s 4 --d 2 --hidden 8 --out circ.json");
  CHECK(r.code == 0);
  r = box.run("analyze clusters --task repeat-copy --s 4 --d 2 --checkpoint circ.json --out cl");
  CHECK(r.code == 0);
  const auto j = nlohmann::json::parse(box.read("cl.json"));
  CHECK(j.at("counts") == std::vector<int>{2, 2, 2, 2});
  r = box.run("analyze spectrum --task repeat-copy --s 4 --d 2 --checkpoint circ.json --out sp");
  CHECK(r.code == 0);
  CHECK(nlohmann::json::parse(box.read("sp.json")).at("mae").get<double>() < 1e-9);
  CHECK(box.exists("sp.svg"));
}

TEST_CASE("cli: repeated commands are byte identical and rerun agrees") {
  Sandbox box;
  const std::string cmd = "train --task repeat-copy --s 2 --d 1 --hidden 6 --iters 20 --batch 4 --seed 9 --out a.json";
  REQUIRE(box.run(cmd).code == 0);
  const std::string first = box.read("a.json");
  const std::string report = box.read("a.json.report.csv");
  REQUIRE(box.run(cmd).code == 0);
  CHECK(box.read("a.json") == first);
  CHECK(box.read("a.json.report.csv") == report);

  const Result r = box.run("rerun --manifest a.json.manifest.json");
  CHECK(r.code == 0);
  // The replayed command prints first; the comparison is the last line.
  const auto last = r.out.find_last_of('\n', r.out.size() - 2);
  const auto j = nlohmann::json::parse(r.out.substr(last == std::string::npos ? 0 : last + 1));
  CHECK(j.at("pass") == true);
  CHECK(j.at("mismatches").empty());
}
