#pragma once

#include "hearthguard/habitat/scenario.hpp"
#include "hearthguard/habitat/simulator.hpp"
