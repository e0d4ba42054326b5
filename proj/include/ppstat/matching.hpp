#ifndef PPSTAT_MATCHING_HPP
#define PPSTAT_MATCHING_HPP

#include "ppstat/matching/chains.hpp"
#include "ppstat/matching/spatial_index.hpp"
#include "ppstat/matching/stable_match.hpp"
#include "ppstat/matching/stats.hpp"

#endif // PPSTAT_MATCHING_HPP
