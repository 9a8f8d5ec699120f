#pragma once

#include "rowe/correlation.hpp"
#include "rowe/endpoint.hpp"
#include "rowe/errors.hpp"
#include "rowe/message_queue.hpp"
#include "rowe/notification.hpp"
#include "rowe/ttl.hpp"
#include "rowe/ttl_queue.hpp"
#include "rowe/wire.hpp"
