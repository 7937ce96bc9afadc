// Reference external simulator speaking the file-exchange protocol:
//   csv_sine_sim <request-csv> <response-csv>
// Request rows are `x1,x2`; response rows are the single value
// sin(3*pi*x1) + cos(3*pi*x2). Used by the adapter tests and as a template
// for wiring real external simulators.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

int main(int argc, char** argv) {
    if (argc != 3) {
        std::cerr << "usage: csv_sine_sim <request-csv> <response-csv>\n";
        return 2;
    }
    std::ifstream req(argv[1]);
    if (!req) {
        std::cerr << "cannot open request file: " << argv[1] << "\n";
        return 1;
    }
    std::ofstream resp(argv[2], std::ios::trunc);
    if (!resp) {
        std::cerr << "cannot open response file: " << argv[2] << "\n";
        return 1;
    }

    const double pi = 3.14159265358979323846;
    std::string line;
    std::size_t row = 0;
    char buf[64];
    while (std::getline(req, line)) {
        if (line.empty()) continue;
        ++row;
        std::stringstream ss(line);
        std::string a, b;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',')) {
            std::cerr << "request row " << row << ": expected two columns\n";
            return 1;
        }
        const double x1 = std::strtod(a.c_str(), nullptr);
        const double x2 = std::strtod(b.c_str(), nullptr);
        std::snprintf(buf, sizeof(buf), "%.17g", std::sin(3.0 * pi * x1) + std::cos(3.0 * pi * x2));
        resp << buf << '\n';
    }
    return 0;
}
