#pragma once

#include "hearthguard/conductor/conductor.hpp"
#include "hearthguard/conductor/mode.hpp"
