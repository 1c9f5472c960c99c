"""
Reference truncation errors at T = 1, rounded to six decimals.

DIRECT holds epsilon for the direct matrix at L = 4 ... 128; PRODUCT_PAPER
and PRODUCT_PAIRED hold epsilon* for the product matrix at L = 4 ... 64 with
the "paper" and "paired" variant choices.
"""
HURSTS = ["0.1", "0.2", "0.3", "0.4", "0.5", "0.6", "0.7", "0.8", "0.9"]

DIRECT_ORDERS = [4, 8, 16, 32, 64, 128]
PRODUCT_ORDERS = [4, 8, 16, 32, 64]

TOLERANCE = 5e-7

DIRECT = {
    "0.1": [0.384241, 0.322871, 0.271951, 0.229895, 0.195015, 0.165934],
    "0.2": [0.186574, 0.136214, 0.100394, 0.074562, 0.055684, 0.041750],
    "0.3": [0.103451, 0.065528, 0.042250, 0.027513, 0.018016, 0.011834],
    "0.4": [0.060670, 0.033037, 0.018487, 0.010481, 0.005981, 0.003424],
    "0.5": [0.035714, 0.016667, 0.008065, 0.003968, 0.001969, 0.000980],
    "0.6": [0.020455, 0.008205, 0.003434, 0.001466, 0.000632, 0.000273],
    "0.7": [0.013216, 0.004937, 0.001924, 0.000763, 0.000305, 0.000123],
    "0.8": [0.021488, 0.011508, 0.006394, 0.003602, 0.002043, 0.001164],
    "0.9": [0.081197, 0.061740, 0.046942, 0.035625, 0.027012, 0.020475],
}

PRODUCT_PAPER = {
    "0.1": [0.385941, 0.324399, 0.273198, 0.230844, 0.195706],
    "0.2": [0.186654, 0.136295, 0.100453, 0.074599, 0.055705],
    "0.3": [0.103540, 0.065560, 0.042260, 0.027516, 0.018017],
    "0.4": [0.060718, 0.033052, 0.018491, 0.010483, 0.005981],
    "0.5": [0.035714, 0.016667, 0.008065, 0.003968, 0.001969],
    "0.6": [0.020484, 0.008212, 0.003436, 0.001466, 0.000632],
    "0.7": [0.013274, 0.004949, 0.001927, 0.000764, 0.000305],
    "0.8": [0.021554, 0.011519, 0.006396, 0.003602, 0.002043],
    "0.9": [0.081270, 0.061755, 0.046945, 0.035625, 0.027012],
}

PRODUCT_PAIRED = {
    "0.1": [0.387505, 0.324598, 0.272852, 0.230361, 0.195257],
    "0.2": [0.188157, 0.136902, 0.100683, 0.074680, 0.055731],
    "0.3": [0.103962, 0.065718, 0.042318, 0.027537, 0.018024],
    "0.4": [0.060756, 0.033064, 0.018495, 0.010484, 0.005982],
    "0.5": [0.035714, 0.016667, 0.008065, 0.003968, 0.001969],
    "0.6": [0.020497, 0.008216, 0.003437, 0.001466, 0.000632],
    "0.7": [0.013329, 0.004961, 0.001930, 0.000764, 0.000305],
    "0.8": [0.021687, 0.011556, 0.006409, 0.003607, 0.002045],
    "0.9": [0.081701, 0.061995, 0.047097, 0.035724, 0.027077],
}

PRESETS = {
    "table1": (DIRECT_ORDERS, DIRECT),
    "table2": (PRODUCT_ORDERS, PRODUCT_PAPER),
    "table3": (PRODUCT_ORDERS, PRODUCT_PAIRED),
}
