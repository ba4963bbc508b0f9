#pragma once

#include "ctlstop/error.hpp"
#include "ctlstop/roots.hpp"
#include "ctlstop/model.hpp"
#include "ctlstop/intervals.hpp"
#include "ctlstop/generator.hpp"
#include "ctlstop/regions.hpp"
#include "ctlstop/quadratic_game.hpp"
#include "ctlstop/kink_game.hpp"
#include "ctlstop/vi_verifier.hpp"
#include "ctlstop/game_sim.hpp"
#include "ctlstop/fd_solver.hpp"
