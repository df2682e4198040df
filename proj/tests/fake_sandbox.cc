// Stand-in for the code sandbox speaking the same line protocol. It runs
// nothing: a candidate passes when it contains every "# needs: <text>" line
// of its tests, contains "while True" -> timeout, contains "raise" -> fail.
#include <chrono>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include <json.hpp>

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "";
  if (mode == "--exit") return 3;
  std::string line;
  while (std::getline(std::cin, line)) {
    nlohmann::json out;
    nlohmann::json req;
    try {
      req = nlohmann::json::parse(line);
      out["id"] = req.at("id").get<std::string>();
    } catch (const std::exception& e) {
      out = {{"id", ""}, {"status", "error"}, {"detail", e.what()}};
      std::cout << out.dump() << std::endl;
      continue;
    }
    if (mode == "--garbage") {
      std::cout << "not json" << std::endl;
      continue;
    }
    const auto candidate = req.value("candidate", "");
    const auto tests = req.value("tests", "");
    const int limit = req.value("time_limit_ms", 10000);
    if (candidate.find("while True") != std::string::npos) {
      std::this_thread::sleep_for(std::chrono::milliseconds(limit));
      out["status"] = "timeout";
      out["detail"] = "exceeded " + std::to_string(limit) + " ms";
    } else if (candidate.find("raise") != std::string::npos) {
      out["status"] = "fail";
      out["detail"] = "AssertionError";
    } else {
      bool ok = candidate.find("def " + req.value("entry_point", "")) != std::string::npos;
      std::istringstream ts(tests);
      std::string t;
      while (std::getline(ts, t)) {
        if (t.rfind("# needs: ", 0) == 0 && candidate.find(t.substr(9)) == std::string::npos) ok = false;
      }
      out["status"] = ok ? "pass" : "fail";
      out["detail"] = "";
    }
    std::cout << out.dump() << std::endl;
  }
  return 0;
}
