#pragma once

#include <string_view>

namespace stacksense::embedded {

extern const std::string_view kReferenceSchema;
extern const std::string_view kReferenceLabels;
extern const std::string_view kReferenceDistribution;

}  // namespace stacksense::embedded
