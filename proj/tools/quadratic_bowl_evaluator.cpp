// Line-protocol evaluator for Q(mu) = sum_i a_i mu_i^2.
// Usage: quadratic_bowl_evaluator a_1 a_2 ... a_d
// Reads one design vector per line on stdin, writes one value per line.
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
  std::vector<double> a;
  for (int k = 1; k < argc; ++k) a.push_back(std::strtod(argv[k], nullptr));
  if (a.empty()) {
    std::cerr << "usage: quadratic_bowl_evaluator a_1 ... a_d\n";
    return 2;
  }
  std::string line;
  while (std::getline(std::cin, line)) {
    std::istringstream in(line);
    double q = 0.0;
    for (double ai : a) {
      double mu = 0.0;
      if (!(in >> mu)) {
        std::cerr << "malformed request: " << line << "\n";
        return 3;
      }
      q += ai * (mu * mu);
    }
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), q);
    std::cout.write(buf, res.ptr - buf);
    std::cout << '\n' << std::flush;
  }
  return 0;
}
