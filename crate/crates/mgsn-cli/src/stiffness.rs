//! The embedded board-stiffness dataset: four stiffness measurements
//! (shock, vibration and two static tests) on each of 30 boards.

use mgsn::DataMatrix;

/// Raw measurements, one row per board.
pub const STIFFNESS_RAW: [[f64; 4]; 30] = [
    [1889.0, 1651.0, 1561.0, 1778.0],
    [2403.0, 2048.0, 2087.0, 2197.0],
    [2119.0, 1700.0, 1815.0, 2222.0],
    [1645.0, 1627.0, 1110.0, 1533.0],
    [1976.0, 1916.0, 1614.0, 1883.0],
    [1712.0, 1712.0, 1439.0, 1546.0],
    [1943.0, 1685.0, 1271.0, 1671.0],
    [2104.0, 1820.0, 1717.0, 1874.0],
    [2983.0, 2794.0, 2412.0, 2581.0],
    [1745.0, 1600.0, 1348.0, 1508.0],
    [1710.0, 1591.0, 1518.0, 1667.0],
    [2046.0, 1907.0, 1627.0, 1898.0],
    [1840.0, 1841.0, 1595.0, 1741.0],
    [1867.0, 1685.0, 1493.0, 1678.0],
    [1859.0, 1649.0, 1389.0, 1714.0],
    [1954.0, 2149.0, 1180.0, 1281.0],
    [1325.0, 1170.0, 1002.0, 1176.0],
    [1419.0, 1371.0, 1251.0, 1308.0],
    [1828.0, 1634.0, 1602.0, 1755.0],
    [1725.0, 1594.0, 1313.0, 1646.0],
    [2276.0, 2189.0, 1547.0, 2111.0],
    [1899.0, 1614.0, 1422.0, 1477.0],
    [1633.0, 1513.0, 1290.0, 1516.0],
    [2061.0, 1867.0, 1646.0, 2037.0],
    [1856.0, 1493.0, 1356.0, 1533.0],
    [1727.0, 1412.0, 1238.0, 1469.0],
    [2168.0, 1896.0, 1701.0, 1834.0],
    [1655.0, 1675.0, 1414.0, 1597.0],
    [2326.0, 2301.0, 2065.0, 2234.0],
    [1490.0, 1382.0, 1214.0, 1284.0],
];

/// The dataset as a `DataMatrix`. Fitting conventionally divides the
/// measurements by 100 (`raw = false`), which shifts the log-likelihood
/// by a known constant and nothing else.
pub fn stiffness_data(raw: bool) -> DataMatrix {
    let scale = if raw { 1.0 } else { 0.01 };
    let values: Vec<f64> = STIFFNESS_RAW.iter().flatten().map(|v| v * scale).collect();
    let labels = (1..=4).map(|j| format!("x{j}")).collect();
    DataMatrix::new(values, 30, 4, labels).expect("embedded dataset is well-formed")
}
