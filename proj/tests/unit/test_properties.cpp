#include <gtest/gtest.h>

#include <ostream>

#include "properties.hpp"

namespace props {
void PrintTo(const Property& p, std::ostream* os) { *os << p.name; }
}  // namespace props

class Invariant : public ::testing::TestWithParam<props::Property> {};

TEST_P(Invariant, Holds) {
  const props::Outcome o = GetParam().check();
  EXPECT_GE(o.cases, props::min_cases);
  EXPECT_EQ(o.failures, 0u) << o.first_failure;
}

INSTANTIATE_TEST_SUITE_P(Modules, Invariant, ::testing::ValuesIn(props::all()),
                         [](const ::testing::TestParamInfo<props::Property>& info) { return info.param.name; });
