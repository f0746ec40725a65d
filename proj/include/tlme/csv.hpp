#ifndef TLME_CSV_HPP
#define TLME_CSV_HPP

#include <cstdio>
#include <string>

namespace tlme::csv {

// Full-precision number formatting (17 significant digits) so emitted CSV
// survives a write/parse round trip bit-exactly.
inline std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

}  // namespace tlme::csv

#endif  // TLME_CSV_HPP
