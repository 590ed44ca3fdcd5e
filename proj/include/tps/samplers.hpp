#pragma once

#include <array>
#include <string_view>
#include <variant>

#include "tps/ctmc.hpp"
#include "tps/pps.hpp"

namespace tps {

enum class SamplerTag { pps, bd, zanella_sqrt, zanella_min, zanella_ratio };

inline constexpr std::array<SamplerTag, 5> kAllSamplers = {SamplerTag::pps, SamplerTag::bd, SamplerTag::zanella_sqrt,
                                                           SamplerTag::zanella_min, SamplerTag::zanella_ratio};

/// "pps", "bd", "zanella-sqrt", "zanella-min", "zanella-ratio".
std::string_view to_string(SamplerTag tag);
SamplerTag parse_sampler(std::string_view text);

/// Any of the five samplers, started from the zero vector with m = 1.
class Chain {
 public:
  Chain(SamplerTag tag, TargetPtr target, EvalMode mode = EvalMode::full);

  SamplerTag tag() const { return tag_; }
  CountVector state() const;

  template <TraceSink S>
  void run(std::size_t steps, Rng& rng, S& sink) {
    std::visit([&](auto& s) { s.run(steps, rng, sink); }, sampler_);
  }

 private:
  SamplerTag tag_;
  std::variant<PointProcessSampler, CtmcSampler> sampler_;
};

}  // namespace tps
