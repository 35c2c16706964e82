#include "cain/errors.hpp"

#include <sstream>

namespace cain {

std::string shape_string(const at::Tensor& t) {
  std::ostringstream os;
  os << '[';
  for (int64_t i = 0; i < t.dim(); ++i) {
    if (i) os << ", ";
    os << t.size(i);
  }
  os << ']';
  return os.str();
}

}  // namespace cain
