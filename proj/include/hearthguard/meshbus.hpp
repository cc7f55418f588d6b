#pragma once

#include "hearthguard/meshbus/broker.hpp"
#include "hearthguard/meshbus/frame.hpp"
#include "hearthguard/meshbus/net.hpp"
#include "hearthguard/meshbus/topic.hpp"
