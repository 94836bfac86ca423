#ifndef LOSSPRED_UTIL_H_
#define LOSSPRED_UTIL_H_

#include <string>

namespace losspred {

// Shortest representation that parses back to the same double.
std::string format_number(double v);

}  // namespace losspred

#endif  // LOSSPRED_UTIL_H_
