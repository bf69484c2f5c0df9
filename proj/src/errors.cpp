#include "wirecal/errors.hpp"

namespace wirecal {

namespace {

std::string describe(const std::vector<std::string>& partial, const std::vector<std::string>& stuck)
{
  std::string s = "ordering stuck after [";
  for (std::size_t i = 0; i < partial.size(); ++i) s += (i ? ", " : "") + partial[i];
  s += "]; cannot isolate [";
  for (std::size_t i = 0; i < stuck.size(); ++i) s += (i ? ", " : "") + stuck[i];
  return s + "]";
}

}  // namespace

OrderingFailure::OrderingFailure(std::vector<std::string> partial, std::vector<std::string> stuck)
    : Error(describe(partial, stuck)), partial_(std::move(partial)), stuck_(std::move(stuck))
{
}

}  // namespace wirecal
