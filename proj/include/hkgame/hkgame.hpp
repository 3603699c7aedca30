#pragma once

#include "hkgame/errors.hpp"
#include "hkgame/graph.hpp"
#include "hkgame/matfun.hpp"
#include "hkgame/openloop.hpp"
#include "hkgame/receding.hpp"
#include "hkgame/verify.hpp"
#include "hkgame/scenario.hpp"
