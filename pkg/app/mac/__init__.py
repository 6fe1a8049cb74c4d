"""Симуляция TDMA протоколов и энергопотребления узлов"""
