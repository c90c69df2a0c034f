#pragma once

#include "nftm/agg.hpp"
#include "nftm/anon.hpp"
#include "nftm/bench.hpp"
#include "nftm/error.hpp"
#include "nftm/flow.hpp"
#include "nftm/matrix.hpp"
#include "nftm/quantities.hpp"
#include "nftm/ranges.hpp"
#include "nftm/synth.hpp"
#include "nftm/tml.hpp"
#include "nftm/window.hpp"
