#include "tps/samplers.hpp"

#include <stdexcept>
#include <string>

namespace tps {

namespace {

std::variant<PointProcessSampler, CtmcSampler> make_sampler(SamplerTag tag, TargetPtr target, EvalMode mode) {
  switch (tag) {
    case SamplerTag::pps: return PointProcessSampler(std::move(target), 1.0, mode);
    case SamplerTag::bd: return CtmcSampler(std::move(target), CtmcRule::birth_death(), mode);
    case SamplerTag::zanella_sqrt: return CtmcSampler(std::move(target), CtmcRule::zanella(Balance::sqrt), mode);
    case SamplerTag::zanella_min: return CtmcSampler(std::move(target), CtmcRule::zanella(Balance::min1), mode);
    case SamplerTag::zanella_ratio: return CtmcSampler(std::move(target), CtmcRule::zanella(Balance::ratio), mode);
  }
  throw std::invalid_argument("unknown sampler tag");
}

}  // namespace

std::string_view to_string(SamplerTag tag) {
  switch (tag) {
    case SamplerTag::pps: return "pps";
    case SamplerTag::bd: return "bd";
    case SamplerTag::zanella_sqrt: return "zanella-sqrt";
    case SamplerTag::zanella_min: return "zanella-min";
    case SamplerTag::zanella_ratio: return "zanella-ratio";
  }
  return "?";
}

SamplerTag parse_sampler(std::string_view text) {
  for (auto tag : kAllSamplers)
    if (to_string(tag) == text) return tag;
  throw std::invalid_argument("unknown sampler: " + std::string(text));
}

Chain::Chain(SamplerTag tag, TargetPtr target, EvalMode mode)
    : tag_(tag), sampler_(make_sampler(tag, std::move(target), mode)) {}

CountVector Chain::state() const {
  if (const auto* p = std::get_if<PointProcessSampler>(&sampler_)) return p->state().counts;
  return std::get<CtmcSampler>(sampler_).state();
}

}  // namespace tps
