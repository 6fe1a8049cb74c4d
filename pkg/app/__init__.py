"""Симулятор событийного управления WaterBox поверх TDMA"""

__version__ = "1.0.0"
__description__ = "ETC/ADETC для WaterBox: триггеры, MAC-протоколы, энергия, сертификаты"
