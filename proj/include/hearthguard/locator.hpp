#pragma once

#include "hearthguard/locator/geometry.hpp"
#include "hearthguard/locator/movement.hpp"
#include "hearthguard/locator/ranging.hpp"
#include "hearthguard/locator/solver.hpp"
#include "hearthguard/locator/zones.hpp"
