"""The fixed subject namespace used across the stack."""

HUB_REGISTER = "falcon.hub.register"
HUB_RESOLVE = "falcon.hub.resolve"
HUB_SUBMIT = "falcon.hub.submit"
MEASURE_REQUEST = "falcon.measure.request"
MEASURE_RESULT = "falcon.measure.result"
JOB_STATUS = "falcon.job.status"
DEVICE_STATE = "falcon.device.state"

ALL_SUBJECTS = (
    HUB_REGISTER,
    HUB_RESOLVE,
    HUB_SUBMIT,
    MEASURE_REQUEST,
    MEASURE_RESULT,
    JOB_STATUS,
    DEVICE_STATE,
)
