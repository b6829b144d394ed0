#pragma once

#define CONVSPECT_VERSION "0.1.0"
