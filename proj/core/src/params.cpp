#include "tmt/params.hpp"

#include <algorithm>
#include <string>

#include "tmt/errors.hpp"

namespace tmt {

std::size_t parameter_count(const ConstParamRefs& params) {
  std::size_t n = 0;
  for (const Matrix* m : params) n += m->size();
  return n;
}

std::vector<double> flatten(const ConstParamRefs& params) {
  std::vector<double> out;
  out.reserve(parameter_count(params));
  for (const Matrix* m : params) {
    auto v = m->values();
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

void unflatten(std::span<const double> flat, const ParamRefs& params) {
  std::size_t need = 0;
  for (const Matrix* m : params) need += m->size();
  if (need != flat.size()) {
    throw ShapeError("flat parameter vector has " + std::to_string(flat.size()) +
                     " entries, expected " + std::to_string(need));
  }
  std::size_t off = 0;
  for (Matrix* m : params) {
    auto v = m->values();
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(off), v.size(), v.begin());
    off += v.size();
  }
}

}  // namespace tmt
