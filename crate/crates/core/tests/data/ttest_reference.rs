// Generated by ttest_reference.py (mpmath, 60 digits): (differences, t, two-sided p).
pub const T_TEST_REFERENCE: &[(&[f64], f64, f64)] = &[
    (&[0.1, 0.12, 0.08, 0.11, 0.09], 14.142135623730950488, 0.00014512817061319761973),
    (&[0.05, -0.05], 0.0, 1.0),
    (&[0.05, 0.1], 3.0, 0.20483276469913345165),
    (&[0.0, 0.05, 0.1], 1.7320508075688772935, 0.22540333075851662296),
    (&[0.0858, 0.0954], 18.875, 0.033696695735299726059),
    (&[-0.0329, -0.0681], -2.8693181818181818182, 0.2134911632398927105),
    (&[0.0822, 0.1593], 3.1322957198443579767, 0.19673250116651593404),
    (&[-0.0654, -0.239, -0.1212], -2.7725519509426730112, 0.10919212194956174309),
    (&[-0.0003, 0.1722, 0.0727], 1.6309294486925469589, 0.24448091792076183701),
    (&[0.1531, -0.0302, 0.114], 1.4167436468323839456, 0.29226154564385454088),
    (&[-0.1429, 0.0074, 0.003, 0.0883], -0.22960847911882083558, 0.83316028233432288423),
    (&[-0.0506, -0.1162, -0.0373, 0.1103], -0.49056349906009253522, 0.65737573191616962363),
    (&[0.0722, 0.0601, 0.1312, 0.0397], 3.8581933827050322658, 0.030770228600835268227),
    (&[-0.0699, -0.0726, -0.0004, -0.0314, -0.1091], -3.0334485306215394363, 0.038649594495996753493),
    (&[-0.0615, -0.0099, 0.0297, -0.1497, 0.0175], -1.0625000288210050694, 0.34789923638610548815),
    (&[0.2972, -0.0704, 0.057, 0.229, -0.0093], 1.4359507190623944712, 0.22435879661527980967),
    (&[-0.0929, 0.0651, -0.0117, 0.053, 0.1222, 0.1175], 1.2559605392637487951, 0.2646215492308961163),
    (&[-0.076, -0.083, -0.1117, 0.0496, -0.1243, -0.1287], -2.9076963965615034033, 0.03348932821214625464),
    (&[0.0805, 0.1392, 0.3414, 0.2008, 0.2452, 0.1633], 5.2627648536811206076, 0.0032913537094990960642),
    (&[-0.0632, -0.1667, 0.1586, 0.1644, 0.0478, 0.0424, -0.065, -0.0583], 0.18188171670929933092, 0.86083042206739098205),
    (&[-0.0282, 0.039, 0.0074, -0.1143, -0.033, -0.0231, -0.1226, 0.0439], -1.3059773605122067091, 0.23283698029368153896),
    (&[0.2143, 0.1185, 0.2625, 0.169, 0.3101, 0.1544, 0.0635, 0.022], 4.7844570295842169825, 0.0020019271441608177546),
    (&[0.3369, -0.0926, 0.0984, -0.0577, 0.0922, -0.0428, 0.1418, -0.0256, -0.0635, 0.1531], 1.2636521174363845363, 0.23810400031418349423),
    (&[0.0632, -0.041, 0.1692, -0.2089, 0.0073, 0.0374, 0.2045, 0.0958, -0.053, 0.0075], 0.75576127954187775802, 0.46910992364031629237),
    (&[0.2264, 0.1333, 0.1086, 0.1632, -0.023, -0.1006, 0.1129, 0.1393, 0.076, 0.0385], 2.914972690750141982, 0.017171716291843673437),
    (&[0.0769, 0.0072, 0.0632, 0.1422, -0.2124, -0.0782, -0.0346, 0.013, -0.0423, -0.0345, 0.1667, -0.0852], -0.049589258678474081112, 0.96133867951367574383),
    (&[-0.0322, -0.1721, 0.0323, 0.0652, -0.0383, 0.0503, -0.0181, 0.0492, 0.0541, -0.0288, -0.0603, -0.1041], -0.80975276044665312693, 0.43524937376843699229),
    (&[0.1342, -0.0415, 0.1274, 0.1552, 0.0922, 0.1953, 0.0099, 0.0646, 0.0154, 0.0017, 0.0171, 0.0762], 3.3870160701658395063, 0.006066805482100966198),
    (&[-0.1358, 0.0257, -0.0015, 0.1425, 0.0904, -0.051, 0.013, 0.017, 0.1184, -0.0394, -0.066, 0.0962, -0.0448, 0.0116, -0.2584], -0.20597359280830621995, 0.83977671139409619854),
    (&[0.0092, -0.0992, 0.0801, -0.0469, 0.227, 0.2479, 0.0742, -0.1575, 0.1677, -0.1164, -0.1149, 0.0438, 0.0254, -0.0155, -0.0307], 0.61342098751516233719, 0.54943514508919694641),
    (&[0.052, 0.3043, -0.0263, -0.0268, 0.2271, 0.2263, 0.0889, 0.0243, 0.0492, 0.1716, 0.0366, 0.1785, 0.1954, 0.1044, -0.0283], 3.8442331068938171506, 0.0017877592630427683737),
    (&[-0.0277, -0.0229, -0.0176, -0.083, 0.0651, -0.1295, 0.0076, 0.0166, -0.0972, 0.0855, -0.0406, 0.0153, -0.1026, 0.2245, -0.3196, -0.0375, 0.2267, 0.0856, -0.011, 0.0743], -0.16299104841909683873, 0.87224658030807484721),
    (&[-0.0116, 0.0826, 0.1423, -0.0494, 0.0569, 0.0481, 0.083, 0.0559, -0.0975, -0.1014, 0.0058, -0.0053, -0.1203, 0.0038, 0.0316, 0.1586, -0.0481, -0.052, 0.0854, -0.0622], 0.5807700606748422286, 0.56822097817009673103),
    (&[0.0877, 0.1482, 0.0206, -0.0905, 0.2602, 0.1289, 0.0099, 0.0959, 0.0687, 0.0813, 0.1366, -0.0008, 0.1469, 0.2178, 0.143, 0.2935, 0.1681, 0.1531, 0.1096, 0.1188], 5.7555382536266550383, 0.000015143005146078107885),
    (&[-0.0971, 0.0572, 0.0547, 0.0143, -0.0849, 0.0887, 0.1591, 0.0107, -0.0634, 0.0741, -0.0149, 0.0917, -0.0282, 0.006, 0.1085, 0.1025, -0.0176, 0.1234, -0.0026, -0.1367, 0.1778, 0.2249, -0.0133, -0.056, 0.023], 1.7921939504670639534, 0.08571894244222435212),
    (&[-0.0751, 0.0725, 0.0399, 0.0913, 0.0283, 0.1607, 0.0959, -0.0103, -0.0035, -0.1344, 0.1242, 0.0284, 0.0216, 0.1019, 0.052, 0.0108, -0.0057, 0.193, 0.0138, 0.0875, -0.0845, 0.0386, 0.0132, 0.1896, 0.0485], 2.7901605793689181805, 0.010158567453652703071),
    (&[0.3535, 0.0255, 0.2058, 0.2036, 0.1805, 0.1046, 0.1719, 0.4542, -0.0912, 0.1602, 0.0531, 0.057, 0.0484, 0.0559, -0.0177, 0.0317, 0.0589, 0.1466, 0.2322, 0.1764, 0.005, 0.2249, -0.026, 0.4089, 0.1141], 4.979298560757219958, 0.000043807933338290613794),
    (&[0.018, -0.039, 0.0121, -0.0355, -0.1465, -0.0508, 0.0648, -0.1815, -0.0297, -0.1381, 0.0396, 0.1584, 0.055, -0.0541, -0.0741, 0.1707, -0.0213, 0.1385, -0.0564, -0.0659, -0.0135, 0.0492, 0.0967, -0.1111, -0.2283, -0.1077, 0.0356, 0.0074, -0.0524, -0.0455], -1.1657017397389915892, 0.25323341095754338077),
    (&[-0.0992, -0.0748, 0.1181, 0.2357, 0.0238, 0.161, 0.0895, 0.0325, -0.077, 0.063, -0.0782, -0.0261, 0.0747, -0.107, 0.0084, -0.0068, -0.0108, 0.1565, 0.0046, 0.0295, -0.0361, -0.1301, -0.0049, -0.0615, -0.0746, 0.0323, 0.0377, -0.0224, 0.0339, -0.1326], 0.32739152880481177787, 0.74572346493404213766),
    (&[0.245, 0.1805, 0.1348, 0.1131, -0.0162, 0.0185, 0.1704, -0.0825, -0.0429, 0.0265, 0.2347, -0.0849, -0.0136, 0.0747, 0.0672, 0.0589, 0.1988, 0.306, 0.1506, -0.0149, 0.141, -0.0438, 0.1107, 0.1743, 0.1305, 0.084, 0.0046, 0.0655, 0.1752, 0.0776], 4.8184213093929251946, 0.00004201267577008623991),
    (&[-0.0547, -0.0156, -0.084, 0.0305, -0.098, 0.0466, 0.0383, -0.1377, 0.1044, 0.1517, 0.108, 0.022, -0.1526, -0.0026, -0.1057, 0.1474, 0.1307, -0.1083, 0.018, -0.0849, -0.1262, -0.0414, -0.1435, 0.1039, -0.1409, 0.0689, 0.0777, -0.0593, -0.0177, 0.0115, 0.0835, 0.1409, -0.0461, 0.2029, 0.0046], 0.12300058465812597697, 0.90283085463677474996),
    (&[0.1335, 0.0149, -0.0725, -0.1091, 0.0582, -0.1028, -0.0099, 0.017, 0.1134, 0.1106, -0.1035, -0.0309, -0.0335, 0.0288, -0.0054, -0.0448, -0.0361, 0.1411, 0.1056, 0.0732, 0.2613, -0.094, 0.0935, -0.0303, 0.1657, 0.1496, 0.0728, -0.114, -0.1131, 0.0657, -0.0158, -0.0627, 0.2271, 0.0849, -0.1295], 1.3269740409026770117, 0.19336043798333456453),
    (&[0.1995, 0.0825, 0.1082, 0.0427, 0.13, 0.1178, 0.1256, 0.0959, 0.1973, 0.1881, 0.1309, 0.1588, 0.1912, 0.0525, 0.0418, 0.1847, 0.0705, 0.0927, 0.2347, 0.052, 0.0571, 0.0821, 0.2434, 0.1429, 0.1617, 0.1078, 0.0507, -0.0296, 0.1788, 0.1264, 0.2668, 0.0819, 0.312, 0.1524, -0.0231], 9.6786238778113850562, 2.6746485942715060953e-11),
    (&[-0.0534, -0.0685, 0.0201, -0.0423, 0.0162, -0.197, 0.1182, 0.1373, -0.1383, -0.1004, 0.0529, 0.004, -0.0367, -0.0152, 0.0886, -0.2764, -0.2585, 0.0184, -0.0463, -0.0875, -0.1073, -0.0574, 0.0125, 0.0305, -0.1349, -0.1245, -0.0789, -0.1308, -0.0064, -0.0154, -0.2328, -0.1116, -0.192, -0.0419, -0.025, 0.138, 0.0241, -0.0343, -0.116, -0.0522], -3.3974011676173304667, 0.0015784199539062655444),
    (&[-0.0502, 0.0019, 0.0995, -0.1585, -0.0895, 0.0183, 0.1292, 0.0519, 0.0804, -0.124, -0.1795, 0.062, 0.0951, -0.1626, -0.0531, -0.1086, 0.0732, 0.0966, -0.0588, 0.1488, 0.1595, -0.0517, 0.0159, -0.0069, -0.0129, 0.1841, 0.108, 0.0219, 0.1345, -0.0546, 0.0665, 0.0935, 0.2565, -0.1415, -0.1865, 0.0456, -0.0353, 0.0011, 0.0157, 0.0152], 0.74487082932465771224, 0.46081515851171596971),
    (&[0.1361, 0.2388, 0.0609, 0.1103, 0.0966, 0.2334, 0.0777, 0.0797, 0.0272, -0.0095, 0.0325, 0.0632, 0.0509, -0.1045, 0.0885, -0.0683, 0.1726, -0.0449, -0.0725, 0.1067, -0.0546, 0.1288, 0.0377, 0.2069, 0.1693, 0.0962, 0.128, 0.0549, 0.0867, 0.0482, 0.0985, 0.1172, 0.2573, 0.0343, 0.0599, -0.0304, 0.2604, -0.0837, 0.0465, 0.2007], 5.2733990525856270486, 5.2680952644428815605e-6),
    (&[-0.1183, 0.0388, 0.0222, -0.0421, -0.0284, 0.0735, -0.0498, 0.0311, 0.0367, -0.1401, 0.1243, -0.1457, -0.0377, -0.1043, 0.0252, -0.092, 0.0067, -0.0101, -0.0026, 0.212, 0.008, -0.2044, -0.0136, 0.0483, -0.0294, -0.0521, -0.1318, -0.0163, -0.1854, 0.1293, 0.051, 0.1478, 0.1318, -0.1355, 0.1359, -0.0002, -0.0209, -0.1125, 0.0157, -0.0979, -0.0973, 0.1176, 0.0528, -0.0647, -0.1068], -0.9836298357512079446, 0.33067562814579652898),
    (&[0.0503, 0.1015, -0.0282, 0.0208, -0.0509, 0.3379, -0.1008, -0.0053, 0.0288, 0.0647, 0.1495, -0.0094, 0.0317, -0.0944, 0.1873, 0.1226, 0.0395, 0.1595, 0.0231, -0.0901, -0.1082, -0.0593, 0.1001, 0.1351, -0.0255, 0.0168, -0.1582, 0.0383, 0.124, -0.1036, 0.1173, -0.1629, 0.035, 0.1069, 0.0861, 0.0533, 0.0479, 0.016, -0.0894, -0.0001, 0.1856, -0.0009, 0.1191, -0.024, 0.0225], 2.1008001228603763922, 0.041422289969668988569),
    (&[0.0683, -0.067, -0.0083, 0.1305, -0.0227, 0.0857, 0.1424, 0.2063, 0.302, 0.1194, -0.0286, 0.1233, 0.0432, 0.0775, -0.0738, 0.0176, -0.0073, 0.221, 0.0824, 0.0936, 0.2277, 0.1795, 0.1021, -0.0544, 0.2087, 0.0222, 0.225, 0.2139, 0.1247, 0.2576, 0.0344, 0.1253, 0.1826, 0.0989, 0.0241, 0.1762, 0.0151, 0.0454, 0.0258, 0.1123, 0.0404, 0.0825, 0.0879, 0.0938, 0.1036], 7.0637408910390965428, 9.2201720419468056311e-9),
    (&[0.0907, 0.1098, -0.0973, 0.1541, -0.0919, 0.1341, -0.0603, -0.0185, -0.0497, -0.0531, -0.0647, -0.0427, -0.0862, 0.0975, 0.1144, -0.0605, -0.0602, 0.1732, -0.058, -0.037, 0.1077, -0.1007, -0.0487, -0.0469, -0.1701, 0.1293, 0.0788, 0.0954, 0.0331, 0.0635, -0.115, 0.0057, -0.0153, 0.003, 0.0571, -0.1529, 0.247, 0.0357, -0.089, -0.1178, -0.0139, -0.0504, 0.0123, -0.067, 0.0879, 0.0083, -0.0583, 0.0835, 0.2502, 0.1245], 0.67042528659022671313, 0.50573441748870266093),
    (&[0.2033, -0.0521, 0.0166, 0.0443, 0.0057, 0.059, -0.0145, -0.0581, 0.0818, 0.0652, 0.1638, 0.0333, 0.0607, 0.0221, -0.0428, 0.037, 0.0877, 0.0168, 0.1023, -0.0244, 0.1095, 0.0694, -0.0412, 0.0509, -0.1154, -0.0474, -0.0773, 0.0078, 0.1646, 0.2122, -0.1907, 0.0256, 0.0051, -0.1155, 0.0192, -0.0221, -0.0579, 0.1391, 0.1461, 0.0015, 0.2267, 0.0903, 0.0197, -0.0041, 0.0411, 0.1083, 0.0629, -0.0204, 0.0295, 0.0018], 2.7436516802995559989, 0.0084652163119948431041),
    (&[0.0676, 0.2467, 0.0981, 0.2379, 0.1387, 0.1065, 0.0763, 0.1158, 0.0466, 0.0326, -0.0603, 0.1339, 0.1849, 0.0449, 0.0408, 0.0928, 0.1583, -0.0915, 0.0256, -0.0237, 0.3081, -0.0105, 0.0273, 0.002, 0.0846, 0.1327, -0.0718, 0.1593, 0.1823, 0.0922, 0.2172, 0.1142, -0.0234, 0.1288, 0.1456, 0.0012, 0.0796, 0.1171, 0.1508, 0.0376, 0.2124, 0.1626, 0.0771, 0.1887, 0.146, 0.2315, 0.1712, 0.1569, 0.1049, 0.0154], 8.1238821105055489002, 1.2360404863798053946e-10),
];
